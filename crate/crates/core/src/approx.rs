//! Best approximation of an interference pattern by mixtures of
//! `q`-coherent states under a fixed measurement.
//!
//! Mixture patterns are linear in the weights, so for fixed components the
//! optimal weights solve a nonnegative least-squares problem exactly. The
//! outer search runs Nelder–Mead over the component amplitudes, each
//! confined to a `q`-level support, and scores every candidate by its
//! optimal weights.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::pattern_peak_bound;
use crate::error::{Error, Result};
use crate::nnls::nnls;
use crate::optim::{nelder_mead, stream_rng, OptimizationConfig};
use crate::pattern::PatternCoefficients;
use crate::quantum::{check_dims, DensityMatrix, PureState};

/// Residuals above this certify that no `q`-coherent mixture reproduces the pattern.
pub const DECISION_TOL: f64 = 1e-6;

/// Weight of the row enforcing `Σ w = 1` inside the NNLS subproblem.
const SUM_ROW_WEIGHT: f64 = 1e4;

/// Search budget used unless the caller overrides it.
pub fn default_approx_config() -> OptimizationConfig {
    OptimizationConfig { restarts: 16, max_iters: 40_000, tol: 1e-14, seed: 0 }
}

/// Squared L2 distance over one period, `(1/2π)∫(p_a − p_b)² dt`.
pub fn pattern_distance(a: &PatternCoefficients, b: &PatternCoefficients) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let harmonics: f64 = a
        .harmonics()
        .iter()
        .zip(b.harmonics())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    Ok((a.dc() - b.dc()).powi(2) + 2.0 * harmonics)
}

/// Coefficients as a real vector whose Euclidean norm matches the L2 metric.
fn realify(p: &PatternCoefficients) -> DVector<f64> {
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(2 * p.dim() - 1);
    v.push(p.dc());
    for c in p.harmonics() {
        v.push(s * c.re);
        v.push(s * c.im);
    }
    DVector::from_vec(v)
}

/// Pattern of pure `psi` under `sigma`: `c_m = Σ_p ψ_p ψ*_{p−m} σ_{p−m,p}`.
fn pure_pattern(psi: &[Complex64], sigma: &DensityMatrix) -> PatternCoefficients {
    let d = psi.len();
    let c0 = (0..d).map(|p| psi[p].norm_sqr() * sigma.get(p, p).re).sum();
    let c = (1..d)
        .map(|m| (m..d).map(|p| psi[p] * psi[p - m].conj() * sigma.get(p - m, p)).sum())
        .collect();
    PatternCoefficients::new(c0, c).expect("finite amplitudes")
}

/// One pure component of a fitted mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    /// Levels the component may populate.
    pub support: Vec<usize>,
    pub amplitudes: Vec<Complex64>,
    pub pattern: PatternCoefficients,
}

impl MixtureComponent {
    pub fn state(&self) -> Result<PureState> {
        PureState::new(self.amplitudes.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureApprox {
    pub q: usize,
    pub components: Vec<MixtureComponent>,
    /// Squared L2 distance between the mixture pattern and the target.
    pub residual: f64,
    pub target_pattern: PatternCoefficients,
    pub fitted_pattern: PatternCoefficients,
    /// False when the best restart hit its iteration cap.
    pub converged: bool,
}

struct Candidate {
    residual: f64,
    weights: Vec<f64>,
    states: Vec<Vec<Complex64>>,
    converged: bool,
}

/// Decodes `2q` reals per component into normalized amplitudes on its support.
fn decode(x: &[f64], supports: &[Vec<usize>], d: usize) -> Option<Vec<Vec<Complex64>>> {
    let mut out = Vec::with_capacity(supports.len());
    let mut it = x.chunks_exact(2);
    for s in supports {
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        for &level in s {
            let pair = it.next().expect("parameter count matches supports");
            amps[level] = Complex64::new(pair[0], pair[1]);
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-150) {
            return None;
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        out.push(amps);
    }
    Some(out)
}

/// Best weights on the probability simplex and the resulting exact residual.
fn best_weights(patterns: &[PatternCoefficients], target: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let rows = target.len();
    let n = patterns.len();
    let mut a = DMatrix::zeros(rows + 1, n);
    for (j, p) in patterns.iter().enumerate() {
        a.view_mut((0, j), (rows, 1)).copy_from(&realify(p));
        a[(rows, j)] = SUM_ROW_WEIGHT;
    }
    let mut b = DVector::zeros(rows + 1);
    b.rows_mut(0, rows).copy_from(target);
    b[rows] = SUM_ROW_WEIGHT;
    let w = nnls(&a, &b)?;
    let total = w.sum();
    if !(total > 0.0) {
        return Ok((vec![1.0 / n as f64; n], f64::INFINITY));
    }
    let w: Vec<f64> = w.iter().map(|v| v / total).collect();
    let mut fit = DVector::zeros(rows);
    for (j, p) in patterns.iter().enumerate() {
        fit += realify(p) * w[j];
    }
    Ok((w, (fit - target).norm_squared()))
}

/// All `q`-subsets of `0..d` in lexicographic order.
fn subsets(d: usize, q: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, d: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            go(i + 1, d, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, d, q, &mut Vec::new(), &mut out);
    out
}

/// Fits `target` with `n_components` states of coherence at most `q`
/// measured by `chi`. Restart 0 spreads the components over distinct
/// supports in lexicographic order; later restarts draw supports at random.
pub fn best_q_approximation(
    target: &PatternCoefficients,
    chi: &DensityMatrix,
    q: usize,
    n_components: usize,
    cfg: &OptimizationConfig,
) -> Result<MixtureApprox> {
    cfg.validate()?;
    let d = target.dim();
    check_dims(d, chi.dim())?;
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if n_components == 0 {
        return Err(Error::InvalidArgument("n_components must be at least 1".into()));
    }
    let q_eff = q.min(d);
    let target_vec = realify(target);
    let all_supports = subsets(d, q_eff);

    let runs: Vec<Candidate> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| -> Result<Candidate> {
            let mut rng: ChaCha8Rng = stream_rng(cfg.seed, r as u64);
            let supports: Vec<Vec<usize>> = (0..n_components)
                .map(|m| {
                    if r == 0 {
                        all_supports[m % all_supports.len()].clone()
                    } else {
                        let mut s = sample(&mut rng, d, q_eff).into_vec();
                        s.sort_unstable();
                        s
                    }
                })
                .collect();
            let x0: Vec<f64> = (0..n_components * q_eff * 2)
                .map(|i| if i % 2 == 0 { rng.random_range(0.3..1.0) } else { rng.random_range(-0.3..0.3) })
                .collect();
            let objective = |x: &[f64]| -> f64 {
                let Some(states) = decode(x, &supports, d) else { return f64::INFINITY };
                let pats: Vec<_> = states.iter().map(|s| pure_pattern(s, chi)).collect();
                best_weights(&pats, &target_vec).map_or(f64::INFINITY, |(_, res)| res)
            };
            let min = nelder_mead(objective, &x0, 0.25, cfg.max_iters, cfg.tol);
            let states = decode(&min.x, &supports, d)
                .ok_or_else(|| Error::InvalidState("component amplitudes vanished".into()))?;
            let pats: Vec<_> = states.iter().map(|s| pure_pattern(s, chi)).collect();
            let (weights, residual) = best_weights(&pats, &target_vec)?;
            Ok(Candidate { residual, weights, states, converged: min.converged })
        })
        .collect::<Result<_>>()?;

    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.residual.total_cmp(&b.residual).then(i.cmp(j)))
        .map(|(_, c)| c)
        .expect("at least one restart");

    let components: Vec<MixtureComponent> = best
        .states
        .iter()
        .zip(&best.weights)
        .map(|(amps, &weight)| MixtureComponent {
            weight,
            support: (0..d).filter(|&p| amps[p].norm_sqr() > 0.0).collect(),
            amplitudes: amps.clone(),
            pattern: pure_pattern(amps, chi),
        })
        .collect();
    let mut c0 = 0.0;
    let mut c = vec![Complex64::new(0.0, 0.0); d - 1];
    for comp in &components {
        c0 += comp.weight * comp.pattern.dc();
        for (acc, h) in c.iter_mut().zip(comp.pattern.harmonics()) {
            *acc += *h * comp.weight;
        }
    }
    let fitted = PatternCoefficients::new(c0, c)?;
    Ok(MixtureApprox {
        q,
        residual: pattern_distance(&fitted, target)?,
        components,
        target_pattern: target.clone(),
        fitted_pattern: fitted,
        converged: best.converged,
    })
}

/// Peak-value shortcut available when the measurement is `|W_d⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakCheck {
    pub p_max: f64,
    /// `q/d`, the largest value reachable by `q`-coherent states.
    pub bound: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// True when no `q`-coherent mixture reproduces the pattern, so the
    /// state is at least `(q+1)`-coherent.
    pub not_reproducible: bool,
    pub residual: f64,
    pub q: usize,
    pub n_components: usize,
    /// Present when the measurement is the uniform superposition.
    pub peak_check: Option<PeakCheck>,
    pub fit: MixtureApprox,
}

/// Whether `chi` is the projector onto `|W_d⟩`.
pub fn is_uniform_projection(chi: &DensityMatrix) -> bool {
    let d = chi.dim() as f64;
    chi.matrix().iter().all(|z| (z - Complex64::new(1.0 / d, 0.0)).norm() < 1e-12)
}

/// Decides reproducibility by `C_q` mixtures with `2d − 1` components, the
/// most a point of the attainable pattern set can need. With `q ≥ d` the
/// class holds every state, so the answer is no certification.
pub fn reproducibility_verdict(
    target: &PatternCoefficients,
    chi: &DensityMatrix,
    q: usize,
    cfg: &OptimizationConfig,
) -> Result<Verdict> {
    let d = target.dim();
    let n_components = 2 * d - 1;
    let fit = best_q_approximation(target, chi, q, n_components, cfg)?;
    let peak_check = if is_uniform_projection(chi) && q <= d {
        let bound = pattern_peak_bound(q, d)?;
        let (_, p_max) = target.extremes(256 * d);
        Some(PeakCheck { p_max, bound, exceeds: p_max > bound + 1e-9 })
    } else {
        None
    };
    Ok(Verdict {
        not_reproducible: q < d && fit.residual > DECISION_TOL,
        residual: fit.residual,
        q,
        n_components,
        peak_check,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{pattern_from_pure, pattern_from_states};
    use crate::quantum::{w_state, werner_state, HarmonicBasis, WernerParams};
    use approx::assert_abs_diff_eq;

    fn werner_target(k: usize, lambda: f64) -> (PatternCoefficients, DensityMatrix) {
        let rho = werner_state(WernerParams::new(k, lambda).unwrap(), HarmonicBasis::new(k).unwrap()).unwrap();
        let chi = w_state(k).unwrap().projector();
        (pattern_from_states(&rho, &chi).unwrap(), chi)
    }

    #[test]
    fn distance_values() {
        let flat = PatternCoefficients::constant(0.5, 2);
        let w2 = PatternCoefficients::new(0.5, vec![Complex64::new(0.25, 0.0)]).unwrap();
        assert_abs_diff_eq!(pattern_distance(&w2, &flat).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(pattern_distance(&w2, &w2).unwrap(), 0.0);
        let shifted = PatternCoefficients::constant(0.6, 2);
        assert_abs_diff_eq!(pattern_distance(&flat, &shifted).unwrap(), 0.01, epsilon = 1e-15);
        assert!(pattern_distance(&flat, &PatternCoefficients::constant(0.5, 3)).is_err());
    }

    #[test]
    fn realified_norm_is_the_metric() {
        let a = PatternCoefficients::new(0.3, vec![Complex64::new(0.1, -0.05), Complex64::new(0.02, 0.04)]).unwrap();
        let b = PatternCoefficients::constant(0.2, 3);
        assert_abs_diff_eq!(
            (realify(&a) - realify(&b)).norm_squared(),
            pattern_distance(&a, &b).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pure_pattern_matches_general_route() {
        let psi = PureState::normalized(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.4, 0.0),
        ])
        .unwrap();
        let chi = PureState::normalized(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.1, 0.3),
            Complex64::new(0.2, -0.2),
        ])
        .unwrap();
        let fast = pure_pattern(psi.amplitudes(), &chi.projector());
        let slow = pattern_from_pure(&psi, &chi).unwrap();
        assert!(pattern_distance(&fast, &slow).unwrap() < 1e-28);
    }

    #[test]
    fn subsets_enumerate() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(4, 4).len(), 1);
    }

    #[test]
    fn reproduces_a_two_coherent_pure_state() {
        let psi = PureState::from_real(&[0.0, 0.6, 0.8]).unwrap();
        let chi = w_state(3).unwrap().projector();
        let target = pure_pattern(psi.amplitudes(), &chi);
        let fit = best_q_approximation(&target, &chi, 2, 3, &default_approx_config()).unwrap();
        assert!(fit.residual < 1e-10, "residual {}", fit.residual);
        let wsum: f64 = fit.components.iter().map(|c| c.weight).sum();
        assert_abs_diff_eq!(wsum, 1.0, epsilon = 1e-10);
        assert!(fit.components.iter().all(|c| c.support.len() <= 2 && c.weight >= 0.0));
    }

    #[test]
    fn werner_regimes() {
        let cfg = default_approx_config();
        let (mixed, chi) = werner_target(3, 0.54);
        let fit = best_q_approximation(&mixed, &chi, 2, 3, &cfg).unwrap();
        assert!(fit.residual < 1e-8, "residual {}", fit.residual);

        let (pure_ish, chi) = werner_target(3, 0.18);
        let fit = best_q_approximation(&pure_ish, &chi, 2, 3, &cfg).unwrap();
        assert!(fit.residual > 1e-6, "residual {}", fit.residual);
        // the deficit of the optimal split is (1/2 − λ)²/9
        assert_abs_diff_eq!(fit.residual, 0.32f64.powi(2) / 9.0, epsilon = 1e-7);
    }

    #[test]
    fn verdict_straddles_one_half() {
        let cfg = default_approx_config();
        let (below, chi) = werner_target(3, 0.49);
        let v = reproducibility_verdict(&below, &chi, 2, &cfg).unwrap();
        assert!(v.not_reproducible, "residual {}", v.residual);
        assert!(v.peak_check.as_ref().unwrap().exceeds);

        let (above, chi) = werner_target(3, 0.51);
        let v = reproducibility_verdict(&above, &chi, 2, &cfg).unwrap();
        assert!(!v.not_reproducible, "residual {}", v.residual);
        assert!(!v.peak_check.as_ref().unwrap().exceeds);

        let v = reproducibility_verdict(&below, &chi, 3, &cfg).unwrap();
        assert!(!v.not_reproducible);
    }
}
