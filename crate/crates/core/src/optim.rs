//! Derivative-free local search with seeded, order-independent multi-start.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search budget shared by every optimizer in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence tolerance on the spread of objective values in the simplex.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self { restarts: 32, max_iters: 20_000, tol: 1e-12, seed: 0 }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }
}

/// Independent seed for stream `index` of a master seed (SplitMix64 finalizer).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(master, index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Nelder–Mead with dimension-adaptive coefficients. After convergence the
/// simplex is rebuilt around the best vertex until a rebuild stops paying.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    tol: f64,
) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum { x: Vec::new(), f: f(x0), iters: 0, converged: true };
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    let mut iters = 0;
    let mut converged = false;
    for _rebuild in 0..4 {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_f));
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] += if v[i].abs() > 1e-3 { step * v[i].abs().max(0.1) } else { step };
            let fv = f(&v);
            simplex.push((v, fv));
        }
        let before = best_f;
        converged = false;
        while iters < max_iters {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let f_spread = simplex[n].1 - simplex[0].1;
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if f_spread <= tol && x_spread <= tol.sqrt() {
                converged = true;
                break;
            }
            iters += 1;
            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = f(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(alpha * gamma);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-gamma);
                    let fc = f(&xc);
                    (xc, fc)
                };
                if fc < fr.min(simplex[n].1) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for (v, fv) in simplex.iter_mut().skip(1) {
                        for (a, b) in v.iter_mut().zip(&x_best) {
                            *a = b + delta * (*a - b);
                        }
                        *fv = f(v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_f {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        if !converged || before - best_f <= tol {
            break;
        }
    }
    Minimum { x: best_x, f: best_f, iters, converged }
}

/// Outcome of a multi-start search.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub best: Minimum,
    /// Index of the restart that produced `best`.
    pub best_restart: usize,
    pub converged_restarts: usize,
    /// Best objective of each restart, in restart order.
    pub values: Vec<f64>,
}

/// Minimizes `f` from `cfg.restarts` starting points drawn by `init` from
/// per-restart streams of `cfg.seed`. Restarts run in parallel; the result
/// is the lowest value, ties going to the lowest restart index, so it never
/// depends on scheduling.
pub fn multistart<F, I>(f: F, init: I, step: f64, cfg: &OptimizationConfig) -> Result<MultiStart>
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(usize, &mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    let runs: Vec<Minimum> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r as u64);
            let x0 = init(r, &mut rng);
            nelder_mead(&f, &x0, step, cfg.max_iters, cfg.tol)
        })
        .collect();
    let mut best_restart = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.f < runs[best_restart].f {
            best_restart = i;
        }
    }
    Ok(MultiStart {
        converged_restarts: runs.iter().filter(|r| r.converged).count(),
        values: runs.iter().map(|r| r.f).collect(),
        best: runs[best_restart].clone(),
        best_restart,
    })
}
