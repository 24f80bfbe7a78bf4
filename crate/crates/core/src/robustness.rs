//! Faulty measurements: the projection `|Ψ_k⟩` drifts under a random GUE
//! Hamiltonian, `|χ(τ)⟩ = e^{iHτ}|Ψ_k⟩`, and `R_3` is tracked against the
//! deviation `D(τ) = Σ_i |χ(τ)_i − χ_i|²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::r3_threshold;
use crate::error::{Error, Result};
use crate::optim::{split_seed, OptimizationConfig};
use crate::pattern::{pattern_from_pure, ratio};
use crate::quantum::{check_dims, PureState};
use crate::thresholds::maximize_rn_over_ck;

/// Mixed into the master seed so Hamiltonian streams never coincide with
/// optimizer restart streams.
const GUE_STREAM: u64 = 0x6775_655f_7377_6565;

/// Hermitian matrix drawn from the Gaussian unitary ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct GueSample {
    matrix: DMatrix<Complex64>,
    seed: u64,
}

impl GueSample {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `H = (A + A†)/2` with independent standard normal real and imaginary
/// parts in `A`: diagonal variance 1, off-diagonal total variance 1.
pub fn sample_gue(d: usize, seed: u64) -> Result<GueSample> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("GUE dimension {d} must be at least 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(normal(), normal()));
    let matrix = (&a + a.adjoint()).map(|z| z * 0.5);
    Ok(GueSample { matrix, seed })
}

/// `e^{iHτ}|ψ⟩` through the eigendecomposition of `H`.
pub fn drifted_projection(psi: &PureState, h: &GueSample, tau: f64) -> Result<PureState> {
    check_dims(h.dim(), psi.dim())?;
    if !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau = {tau} must be finite")));
    }
    if tau == 0.0 {
        return Ok(psi.clone());
    }
    let eig = h.matrix.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let x = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let mut coeffs = v.adjoint() * x;
    for (c, &lam) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, lam * tau);
    }
    PureState::normalized((v * coeffs).iter().copied().collect())
}

/// `D = Σ_i |a_i − b_i|²`, no square root and no phase gauge.
pub fn measurement_deviation(chi_tau: &PureState, chi0: &PureState) -> Result<f64> {
    check_dims(chi0.dim(), chi_tau.dim())?;
    Ok(chi_tau
        .amplitudes()
        .iter()
        .zip(chi0.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}

/// One `(sample, τ)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sample: usize,
    pub seed: u64,
    pub tau: f64,
    pub deviation: f64,
    pub r3: f64,
    pub k: usize,
}

/// Mean and standard deviation of `R_3` over records with `D` in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Sweep shape. The default grid is `τ = 0` followed by 50 log-spaced
/// points in `[1e-3, 1]`; `D` is binned in steps of 0.1 up to 0.6, wide
/// enough that every bin holds a few dozen records at 100 samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub tau_grid: Vec<f64>,
    pub bin_width: f64,
    pub bin_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { tau_grid: default_tau_grid(), bin_width: 0.1, bin_max: 0.6 }
    }
}

pub fn default_tau_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..50).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 49.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub k: usize,
    pub n_samples: usize,
    /// Proven `R_3` threshold for certifying `k`-coherence.
    pub threshold: f64,
    /// Drift-free `R_3(Ψ_k, Ψ_k)`.
    pub r3_at_zero: f64,
    /// Largest `R_3` over every record.
    pub max_r3: f64,
    pub bins: Vec<BinStat>,
    /// Per sample: `D` where `R_3` first falls to the threshold, linearly
    /// interpolated between grid points. `None` if it never does on the grid.
    pub crossings: Vec<Option<f64>>,
    pub median_crossing: Option<f64>,
}

impl SweepSummary {
    /// Number of adjacent populated bins whose mean increases.
    pub fn monotonicity_violations(&self) -> usize {
        let means: Vec<f64> = self.bins.iter().filter_map(|b| b.mean).collect();
        means.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSweep {
    /// Populations of the drift-free projection `Ψ_k`.
    pub psi: Vec<f64>,
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

/// Drifts the optimal `k`-level projection under `n_samples` GUE
/// Hamiltonians, each seeded from its own stream of `cfg.seed`.
pub fn tolerance_sweep(
    k: usize,
    n_samples: usize,
    sweep: &SweepConfig,
    cfg: &OptimizationConfig,
) -> Result<ToleranceSweep> {
    if !(3..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k}: sweeps need a proven threshold, k in 3..=4")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if sweep.tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("tau grid entries must be finite and nonnegative".into()));
    }
    if !(sweep.bin_width > 0.0 && sweep.bin_max > 0.0) {
        return Err(Error::InvalidArgument("bin width and range must be positive".into()));
    }
    let threshold = r3_threshold(k - 1).map(|r| *r.numer() as f64 / *r.denom() as f64).expect("k in 3..=4");
    let best = maximize_rn_over_ck(3, k, cfg)?;
    let psi = PureState::from_populations(&best.alpha)?;
    let r3_at_zero = ratio(&pattern_from_pure(&psi, &psi)?, 3)?;

    let per_sample: Vec<(Vec<SweepRecord>, Option<f64>)> = (0..n_samples)
        .into_par_iter()
        .map(|s| -> Result<_> {
            let seed = split_seed(cfg.seed ^ GUE_STREAM, s as u64);
            let h = sample_gue(k, seed)?;
            let mut recs = Vec::with_capacity(sweep.tau_grid.len());
            for &tau in &sweep.tau_grid {
                let chi = drifted_projection(&psi, &h, tau)?;
                recs.push(SweepRecord {
                    sample: s,
                    seed,
                    tau,
                    deviation: measurement_deviation(&chi, &psi)?,
                    r3: ratio(&pattern_from_pure(&psi, &chi)?, 3)?,
                    k,
                });
            }
            let crossing = first_crossing(&recs, threshold);
            Ok((recs, crossing))
        })
        .collect::<Result<_>>()?;

    let crossings: Vec<Option<f64>> = per_sample.iter().map(|(_, c)| *c).collect();
    let records: Vec<SweepRecord> = per_sample.into_iter().flat_map(|(r, _)| r).collect();
    let bins = bin_records(&records, sweep.bin_width, sweep.bin_max);
    let max_r3 = records.iter().map(|r| r.r3).fold(f64::NEG_INFINITY, f64::max);
    let median_crossing = median(crossings.iter().map(|c| c.unwrap_or(f64::INFINITY)).collect())
        .filter(|m| m.is_finite());
    Ok(ToleranceSweep {
        psi: best.alpha,
        records,
        summary: SweepSummary {
            k,
            n_samples,
            threshold,
            r3_at_zero,
            max_r3,
            bins,
            crossings,
            median_crossing,
        },
    })
}

/// `D` where `R_3` first drops to `threshold` along the τ grid.
fn first_crossing(recs: &[SweepRecord], threshold: f64) -> Option<f64> {
    let i = recs.iter().position(|r| r.r3 <= threshold)?;
    if i == 0 {
        return Some(recs[0].deviation);
    }
    let (a, b) = (&recs[i - 1], &recs[i]);
    let t = (a.r3 - threshold) / (a.r3 - b.r3);
    Some(a.deviation + t * (b.deviation - a.deviation))
}

fn bin_records(records: &[SweepRecord], width: f64, max: f64) -> Vec<BinStat> {
    let n_bins = (max / width).round() as usize;
    (0..n_bins)
        .map(|b| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.deviation >= lo && r.deviation < hi)
                .map(|r| r.r3)
                .collect();
            let count = vals.len();
            let mean = (count > 0).then(|| vals.iter().sum::<f64>() / count as f64);
            let std = mean.map(|m| (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / count as f64).sqrt());
            BinStat { lo, hi, count, mean, std }
        })
        .collect()
}

/// Median with the usual midpoint rule; infinities sort last.
fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gue_is_hermitian_and_seeded() {
        let a = sample_gue(5, 9).unwrap();
        let b = sample_gue(5, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.matrix() - a.matrix().adjoint()).norm() < 1e-12);
        assert_ne!(a, sample_gue(5, 10).unwrap());
        assert!(sample_gue(1, 0).is_err());
    }

    #[test]
    fn drift_is_unitary_and_reversible() {
        let psi = PureState::from_populations(&[0.22, 0.28, 0.28, 0.22]).unwrap();
        let h = sample_gue(4, 5).unwrap();
        assert_eq!(drifted_projection(&psi, &h, 0.0).unwrap(), psi);
        let fwd = drifted_projection(&psi, &h, 0.7).unwrap();
        let norm: f64 = fwd.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        let back = drifted_projection(&fwd, &h, -0.7).unwrap();
        assert!(measurement_deviation(&back, &psi).unwrap() < 1e-20);
    }

    #[test]
    fn deviation_values() {
        let e0 = PureState::basis(2, 0).unwrap();
        let e1 = PureState::basis(2, 1).unwrap();
        assert_abs_diff_eq!(measurement_deviation(&e0, &e1).unwrap(), 2.0, epsilon = 1e-15);
        let theta: f64 = 0.8;
        let rotated = PureState::new(vec![Complex64::from_polar(1.0, theta), Complex64::new(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            measurement_deviation(&rotated, &e0).unwrap(),
            2.0 - 2.0 * theta.cos(),
            epsilon = 1e-15
        );
        assert!(measurement_deviation(&e0, &PureState::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[1], 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(g[50], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn crossing_interpolates() {
        let rec = |deviation, r3| SweepRecord { sample: 0, seed: 0, tau: 0.0, deviation, r3, k: 3 };
        let recs = [rec(0.0, 1.8), rec(0.1, 1.5), rec(0.3, 1.1)];
        assert_abs_diff_eq!(first_crossing(&recs, 1.3).unwrap(), 0.2, epsilon = 1e-12);
        assert_eq!(first_crossing(&recs, 1.0), None);
        assert_eq!(median(vec![3.0, 1.0, f64::INFINITY]), Some(3.0));
    }

    #[test]
    fn small_sweep_is_reproducible() {
        let cfg = OptimizationConfig { restarts: 4, seed: 17, ..Default::default() };
        let sweep = SweepConfig::default();
        let a = tolerance_sweep(3, 4, &sweep, &cfg).unwrap();
        let b = tolerance_sweep(3, 4, &sweep, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 4 * 51);
        assert_abs_diff_eq!(a.summary.r3_at_zero, 1.7732, epsilon = 1e-4);
        for r in a.records.iter().filter(|r| r.tau == 0.0) {
            assert_eq!(r.deviation, 0.0);
            assert_eq!(r.r3, a.summary.r3_at_zero);
        }
        assert!(tolerance_sweep(5, 4, &sweep, &cfg).is_err());
    }
}
