//! Numerical maxima of `R_n` over `k`-coherent states and Werner-like
//! decoherence thresholds.
//!
//! The maximum over `C_k` is attained by a pure state measured with itself
//! and with all phases zero, so the search runs over overlap vectors `α` on
//! `k` adjacent levels, parametrized as `α_p = x_p² / Σ x²`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::optim::OptimizationConfig;
use crate::bounds::lambda_dec;
use crate::error::{Error, Result};
use crate::optim::multistart;
use crate::pattern::{moments, PatternCoefficients};

fn check_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("moment order n = {n} must be at least 2")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    Ok(())
}

/// Pattern of real overlaps, `c_m = Σ_p α_{p+m} α_p` for `m ≥ 0`.
fn overlap_pattern(alpha: &[f64]) -> PatternCoefficients {
    autocorrelation_pattern(alpha, 1.0, alpha.iter().map(|a| a * a).sum())
}

/// Pattern with `c_0 = dc` and `c_m = scale · Σ_p v_{p+m} v_p`.
fn autocorrelation_pattern(v: &[f64], scale: f64, dc: f64) -> PatternCoefficients {
    let d = v.len();
    let c = (1..d)
        .map(|m| Complex64::new(scale * (0..d - m).map(|p| v[p + m] * v[p]).sum::<f64>(), 0.0))
        .collect();
    PatternCoefficients::new(dc, c).expect("finite coefficients")
}

fn squares_normalized(x: &[f64]) -> Vec<f64> {
    let s: f64 = x.iter().map(|v| v * v).sum();
    x.iter().map(|v| v * v / s).collect()
}

/// `R_n` of the zero-phase pattern with overlaps `alpha` (`Σ α = 1`).
pub fn rn_of_alpha(alpha: &[f64], n: usize) -> Result<f64> {
    check_order(n)?;
    if alpha.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidArgument("overlaps must be nonnegative".into()));
    }
    moments(&overlap_pattern(alpha), n)?.ratio(n)
}

/// Best `R_n` found over `C_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnMaximum {
    pub n: usize,
    pub k: usize,
    /// Amplitudes squared of the maximizing state.
    pub alpha: Vec<f64>,
    pub value: f64,
    /// False when the best restart hit the iteration cap.
    pub converged: bool,
    pub converged_restarts: usize,
    pub restarts: usize,
}

impl RnMaximum {
    /// Largest `|α_p − α_{k−1−p}|`.
    pub fn palindrome_defect(&self) -> f64 {
        let k = self.alpha.len();
        (0..k).map(|p| (self.alpha[p] - self.alpha[k - 1 - p]).abs()).fold(0.0, f64::max)
    }
}

/// Maximizes `R_n` over `k`-coherent states. Restart 0 starts from `W_k`, so
/// the result never falls below the uniform superposition.
pub fn maximize_rn_over_ck(n: usize, k: usize, cfg: &OptimizationConfig) -> Result<RnMaximum> {
    check_order(n)?;
    check_k(k)?;
    let objective = |x: &[f64]| {
        let alpha = squares_normalized(x);
        match moments(&overlap_pattern(&alpha), n).and_then(|m| m.ratio(n)) {
            Ok(r) => -r,
            Err(_) => f64::INFINITY,
        }
    };
    let init = |r: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        if r == 0 {
            vec![1.0; k]
        } else {
            (0..k).map(|_| rng.random_range(0.2..1.2)).collect()
        }
    };
    let ms = multistart(objective, init, 0.3, cfg)?;
    Ok(RnMaximum {
        n,
        k,
        alpha: squares_normalized(&ms.best.x),
        value: -ms.best.f,
        converged: ms.best.converged,
        converged_restarts: ms.converged_restarts,
        restarts: cfg.restarts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub k: usize,
    pub value: f64,
    pub converged: bool,
    /// Residual against the fitted line.
    pub residual: f64,
}

/// Maxima for `k = 2..=k_max` with a least-squares line through them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthScan {
    pub n: usize,
    pub points: Vec<GrowthPoint>,
    pub slope: f64,
    pub intercept: f64,
}

impl GrowthScan {
    pub fn max_abs_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual.abs()).fold(0.0, f64::max)
    }
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs two or more paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Runs [`maximize_rn_over_ck`] for every `k` in `2..=k_max` and fits a line.
/// Desk-scale runtimes hold up to `k_max = 30`.
pub fn growth_scan(n: usize, k_max: usize, cfg: &OptimizationConfig) -> Result<GrowthScan> {
    if k_max < 3 {
        return Err(Error::InvalidArgument(format!("k_max = {k_max} must be at least 3")));
    }
    let maxima = (2..=k_max)
        .map(|k| maximize_rn_over_ck(n, k, cfg))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = maxima.iter().map(|m| m.k as f64).collect();
    let ys: Vec<f64> = maxima.iter().map(|m| m.value).collect();
    let (slope, intercept) = fit_line(&xs, &ys)?;
    let points = maxima
        .iter()
        .map(|m| GrowthPoint {
            k: m.k,
            value: m.value,
            converged: m.converged,
            residual: m.value - (slope * m.k as f64 + intercept),
        })
        .collect();
    Ok(GrowthScan { n, points, slope, intercept })
}

/// Measurement used when scoring a Werner-like state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Projection onto `|W_k⟩`.
    FixedW,
    /// Best real nonnegative `|χ⟩` found by multi-start search. Phases only
    /// lower the moments of a state with nonnegative matrix elements, so
    /// this covers every pure projection.
    Optimized,
}

impl Projection {
    pub fn describe(self, k: usize) -> String {
        match self {
            Projection::FixedW => format!("fixed |W_{k}>"),
            Projection::Optimized => format!("optimized real chi on {k} levels"),
        }
    }
}

/// Pattern of the `k`-level Werner-like state under real projection `chi`:
/// `c_0 = 1/k`, `c_m = (1 − λ)/k · Σ_p χ_{p+m} χ_p`.
pub fn werner_pattern(k: usize, lambda: f64, chi: &[f64]) -> Result<PatternCoefficients> {
    check_k(k)?;
    if chi.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: chi.len() });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} outside [0, 1]")));
    }
    let norm2: f64 = chi.iter().map(|c| c * c).sum();
    if !(norm2 > 0.0) {
        return Err(Error::InvalidArgument("projection vector must be nonzero".into()));
    }
    let unit: Vec<f64> = chi.iter().map(|c| c / norm2.sqrt()).collect();
    Ok(autocorrelation_pattern(&unit, (1.0 - lambda) / k as f64, 1.0 / k as f64))
}

/// `R_n` of the Werner-like state and the projection achieving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WernerScore {
    pub value: f64,
    pub chi: Vec<f64>,
    pub converged: bool,
}

/// `R_n` of `werner(k, λ)` under the chosen projection.
pub fn werner_rn(
    n: usize,
    k: usize,
    lambda: f64,
    projection: Projection,
    cfg: &OptimizationConfig,
) -> Result<WernerScore> {
    check_order(n)?;
    let w = vec![1.0 / (k as f64).sqrt(); k];
    let score = |chi: &[f64]| -> Result<f64> { moments(&werner_pattern(k, lambda, chi)?, n)?.ratio(n) };
    match projection {
        Projection::FixedW => Ok(WernerScore { value: score(&w)?, chi: w, converged: true }),
        Projection::Optimized => {
            score(&w)?;
            let objective = |x: &[f64]| score(x).map_or(f64::INFINITY, |r| -r);
            let init = |r: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
                if r == 0 {
                    vec![1.0; k]
                } else {
                    (0..k).map(|_| rng.random_range(0.2..1.2)).collect()
                }
            };
            let ms = multistart(objective, init, 0.3, cfg)?;
            let norm = ms.best.x.iter().map(|c| c * c).sum::<f64>().sqrt();
            Ok(WernerScore {
                value: -ms.best.f,
                chi: ms.best.x.iter().map(|c| c.abs() / norm).collect(),
                converged: ms.best.converged,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    Bisection,
}

/// Mixedness at which `R_n` of the Werner-like state drops to `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub n: usize,
    pub k: usize,
    pub lambda_thr: f64,
    pub method: ThresholdMethod,
    pub projection: Projection,
    pub projection_description: String,
    pub threshold: f64,
    /// False when the pure state already fails the threshold; `lambda_thr` is then 0.
    pub reachable: bool,
    /// False when an inner maximization hit its iteration cap.
    pub converged: bool,
    pub lambda_dec: f64,
}

/// Bisection tolerance on `λ`.
pub const LAMBDA_TOL: f64 = 1e-6;

/// Bisects `λ ∈ [0, 1]` for `R_n(werner(k, λ)) = threshold`. `R_n` falls
/// monotonically from its pure-state value to `1/k` at `λ = 1`.
pub fn lambda_threshold(
    n: usize,
    k: usize,
    threshold: f64,
    projection: Projection,
    cfg: &OptimizationConfig,
) -> Result<ThresholdRecord> {
    check_order(n)?;
    check_k(k)?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold = {threshold} must be positive")));
    }
    let mut converged = true;
    let mut excess = |lambda: f64| -> Result<f64> {
        let s = werner_rn(n, k, lambda, projection, cfg)?;
        converged &= s.converged;
        Ok(s.value - threshold)
    };
    let record = |lambda_thr, reachable, converged| ThresholdRecord {
        n,
        k,
        lambda_thr,
        method: ThresholdMethod::Bisection,
        projection,
        projection_description: projection.describe(k),
        threshold,
        reachable,
        converged,
        lambda_dec: lambda_dec(k, k - 1).expect("k >= 2"),
    };
    if excess(0.0)? <= 0.0 {
        return Ok(record(0.0, false, converged));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if excess(hi)? > 0.0 {
        return Ok(record(1.0, true, converged));
    }
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(record(0.5 * (lo + hi), true, converged))
}

/// `R_n(W_q, W_q)`, the value of the uniform `q`-level superposition.
pub fn w_state_rn(n: usize, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    rn_of_alpha(&vec![1.0 / q as f64; q], n)
}

/// Thresholds for failing to detect `k`-coherence, `n = 3..=5`, `k = 3..=10`.
/// Each cell compares the best-measured Werner-like state against the
/// uniform `(k−1)`-level superposition, `R_n(W_{k−1})`.
pub fn decoherence_threshold_table(cfg: &OptimizationConfig) -> Result<Vec<ThresholdRecord>> {
    let cells: Vec<(usize, usize)> = (3..=5).flat_map(|n| (3..=10).map(move |k| (n, k))).collect();
    cells
        .par_iter()
        .map(|&(n, k)| lambda_threshold(n, k, w_state_rn(n, k - 1)?, Projection::Optimized, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::r3_w_closed_form;
    use crate::pattern::pattern_from_states;
    use crate::quantum::{werner_state, HarmonicBasis, PureState, WernerParams};
    use approx::assert_abs_diff_eq;

    fn quick() -> OptimizationConfig {
        OptimizationConfig { restarts: 6, seed: 3, ..Default::default() }
    }

    #[test]
    fn two_levels_reach_five_quarters() {
        let m = maximize_rn_over_ck(3, 2, &quick()).unwrap();
        assert_abs_diff_eq!(m.value, 1.25, epsilon = 1e-9);
        assert_abs_diff_eq!(m.alpha[0], 0.5, epsilon = 1e-4);
        assert!(m.converged);
    }

    #[test]
    fn three_levels_beat_w3_but_not_the_bound() {
        let m = maximize_rn_over_ck(3, 3, &quick()).unwrap();
        assert!(m.value >= r3_w_closed_form(3).unwrap() - 1e-12);
        assert!(m.value <= 179.0 / 96.0 + 1e-6);
        assert_abs_diff_eq!(m.value, 1.77, epsilon = 0.01);
        assert!(m.palindrome_defect() < 1e-3);
    }

    #[test]
    fn werner_pattern_matches_density_matrix_route() {
        let (k, lambda) = (4, 0.3);
        let chi = [0.4, 0.7, 0.5, 0.3];
        let fast = werner_pattern(k, lambda, &chi).unwrap();
        let rho = werner_state(WernerParams::new(k, lambda).unwrap(), HarmonicBasis::new(k).unwrap()).unwrap();
        let sigma = PureState::from_real(&chi).unwrap().projector();
        let slow = pattern_from_states(&rho, &sigma).unwrap();
        assert_abs_diff_eq!(fast.dc(), slow.dc(), epsilon = 1e-14);
        for m in 1..k {
            assert!((fast.harmonic(m) - slow.harmonic(m)).norm() < 1e-14);
        }
    }

    #[test]
    fn fixed_projection_is_monotone_in_lambda() {
        let cfg = quick();
        let vals: Vec<f64> = (0..=100)
            .map(|i| werner_rn(3, 4, i as f64 / 100.0, Projection::FixedW, &cfg).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert_abs_diff_eq!(vals[0], r3_w_closed_form(4).unwrap(), epsilon = 1e-12);
        // fully mixed: flat pattern at 1/k
        assert_abs_diff_eq!(vals[100], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn optimized_projection_dominates_fixed() {
        let cfg = quick();
        for lambda in [0.0, 0.2, 0.5] {
            let fixed = werner_rn(3, 3, lambda, Projection::FixedW, &cfg).unwrap().value;
            let opt = werner_rn(3, 3, lambda, Projection::Optimized, &cfg).unwrap().value;
            assert!(opt >= fixed - 1e-12);
        }
    }

    #[test]
    fn bisection_hits_the_threshold() {
        let cfg = quick();
        let rec = lambda_threshold(3, 3, 1.25, Projection::FixedW, &cfg).unwrap();
        assert!(rec.reachable);
        let at = werner_rn(3, 3, rec.lambda_thr, Projection::FixedW, &cfg).unwrap().value;
        assert_abs_diff_eq!(at, 1.25, epsilon = 1e-5);
        assert!(rec.lambda_thr > 0.0 && rec.lambda_thr <= rec.lambda_dec);

        let unreachable = lambda_threshold(3, 3, 5.0, Projection::FixedW, &cfg).unwrap();
        assert!(!unreachable.reachable);
        assert_eq!(unreachable.lambda_thr, 0.0);
    }

    #[test]
    fn line_fit() {
        let (s, i) = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(i, 1.0, epsilon = 1e-14);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn argument_errors() {
        let cfg = quick();
        assert!(maximize_rn_over_ck(1, 3, &cfg).is_err());
        assert!(maximize_rn_over_ck(3, 1, &cfg).is_err());
        assert!(werner_pattern(3, 1.5, &[1.0, 1.0, 1.0]).is_err());
        assert!(werner_pattern(3, 0.5, &[1.0, 1.0]).is_err());
        assert!(lambda_threshold(3, 3, -1.0, Projection::FixedW, &cfg).is_err());
    }
}
