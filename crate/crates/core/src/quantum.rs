//! States over the harmonic energy basis.
//!
//! Level `n` carries energy `n`, so every evolution is periodic in `2π` and a
//! state's interference pattern is a trigonometric polynomial with integer
//! frequencies. Levels are 0-indexed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on normalization, Hermiticity and trace.
pub const STATE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_FLOOR: f64 = -1e-10;
/// Default modulus below which an amplitude counts as vanishing.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Equally spaced spectrum with `dim` levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicBasis {
    dim: usize,
}

impl HarmonicBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("basis needs at least one level".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Energy of level `n`.
    pub fn energy(&self, level: usize) -> f64 {
        level as f64
    }

    /// Period of every evolution generated by the harmonic Hamiltonian.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU
    }
}

/// Normalized pure state. Also used for measurement (projection) states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps already-normalized amplitudes.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq.sqrt() - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "amplitude vector has norm {} (expected 1)",
                norm_sq.sqrt()
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        let amplitudes: Vec<_> = amplitudes.into_iter().map(|a| a / norm).collect();
        Self::new(amplitudes)
    }

    /// Real amplitudes, normalized.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// State with nonnegative real amplitudes `sqrt(pops[n])`, after
    /// renormalizing the populations.
    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        if pops.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidState("populations must be nonnegative".into()));
        }
        Self::normalized(pops.iter().map(|&p| Complex64::new(p.sqrt(), 0.0)).collect())
    }

    /// Basis state `|level⟩` in a `dim`-level space.
    pub fn basis(dim: usize, level: usize) -> Result<Self> {
        if level >= dim {
            return Err(Error::InvalidArgument(format!(
                "level {level} outside a {dim}-level basis"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[level] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Squared moduli of the amplitudes.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Pads with empty levels up to `dim`.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut amps = self.amplitudes.clone();
        amps.resize(dim, Complex64::new(0.0, 0.0));
        Ok(Self { amplitudes: amps })
    }

    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        DensityMatrix { matrix: m }
    }
}

/// Number of amplitudes whose modulus exceeds `tol`.
pub fn coherence_support(psi: &PureState, tol: f64) -> usize {
    psi.amplitudes.iter().filter(|a| a.norm() > tol).count()
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::InvalidState("density matrix must be square and nonempty".into()));
        }
        for i in 0..d {
            for j in 0..d {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > STATE_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        let trace: Complex64 = (0..d).map(|i| matrix[(i, i)]).sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min_eig = nalgebra::SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig}")));
        }
        Ok(Self { matrix })
    }

    /// `Σ w_i |ψ_i⟩⟨ψ_i|`; weights must be nonnegative and sum to one.
    pub fn mixture(components: &[(f64, &PureState)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let d = first.1.dim();
        let mut m = DMatrix::zeros(d, d);
        for (w, psi) in components {
            check_dims(d, psi.dim())?;
            if *w < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            m += psi.projector().matrix * Complex64::new(*w, 0.0);
        }
        Self::new(m)
    }

    /// `lambda·a + (1 − lambda)·b`.
    pub fn convex_combination(lambda: f64, a: &Self, b: &Self) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0, 1]")));
        }
        Ok(Self {
            matrix: &a.matrix * Complex64::new(lambda, 0.0)
                + &b.matrix * Complex64::new(1.0 - lambda, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Pads with empty levels up to `dim`.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        let d = self.dim();
        if dim < d {
            return Err(Error::DimensionMismatch { expected: d, found: dim });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (d, d)).copy_from(&self.matrix);
        Ok(Self { matrix: m })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Werner-like state: `k` populated levels mixed with white noise of weight `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerParams {
    k: usize,
    lambda: f64,
}

impl WernerParams {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("Werner state needs k >= 1".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
        }
        Ok(Self { k, lambda })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `(1 − λ)|W_k⟩⟨W_k| + (λ/k)·𝟙_k` on the first `k` levels of `basis`.
pub fn werner_state(params: WernerParams, basis: HarmonicBasis) -> Result<DensityMatrix> {
    let (k, lambda) = (params.k, params.lambda);
    if k > basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: basis.dim(),
        });
    }
    let d = basis.dim();
    let kf = k as f64;
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i >= k || j >= k {
            Complex64::new(0.0, 0.0)
        } else if i == j {
            Complex64::new(1.0 / kf, 0.0)
        } else {
            Complex64::new((1.0 - lambda) / kf, 0.0)
        }
    });
    DensityMatrix::new(m)
}

/// ℓ1 coherence norm: sum of moduli of the off-diagonal elements.
pub fn l1_norm(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                total += rho.matrix[(i, j)].norm();
            }
        }
    }
    total
}

/// Equal superposition of levels `0..k`.
pub fn w_state(k: usize) -> Result<PureState> {
    if k == 0 {
        return Err(Error::InvalidArgument("W state needs k >= 1".into()));
    }
    PureState::from_populations(&vec![1.0; k])
}

/// Tabulated populations of the `R_n`-maximizing `k`-coherent states, as
/// `(n, k, populations)`, to two decimals.
pub const TABULATED_OPTIMA: &[(usize, usize, &[f64])] = &[
    (3, 2, &[0.50, 0.50]),
    (3, 3, &[0.31, 0.38, 0.31]),
    (3, 4, &[0.22, 0.28, 0.28, 0.22]),
    (3, 5, &[0.17, 0.21, 0.23, 0.21, 0.17]),
    (4, 2, &[0.50, 0.50]),
    (4, 3, &[0.32, 0.36, 0.32]),
    (4, 4, &[0.23, 0.27, 0.27, 0.23]),
    (4, 5, &[0.18, 0.21, 0.22, 0.21, 0.18]),
    (5, 2, &[0.50, 0.50]),
    (5, 3, &[0.32, 0.36, 0.32]),
    (5, 4, &[0.24, 0.26, 0.26, 0.24]),
    (5, 5, &[0.19, 0.21, 0.21, 0.21, 0.19]),
];

/// Tabulated optimum `Ψ_k` for `R_3`, available for `k ≤ 5`. Larger `k`
/// must come from [`crate::thresholds::maximize_rn_over_ck`].
pub fn psi_star(k: usize) -> Result<PureState> {
    psi_star_for(3, k)
}

/// Tabulated optimum for moment order `n`.
pub fn psi_star_for(n: usize, k: usize) -> Result<PureState> {
    if k == 1 {
        return PureState::basis(1, 0);
    }
    TABULATED_OPTIMA
        .iter()
        .find(|(tn, tk, _)| *tn == n && *tk == k)
        .map(|(_, _, pops)| PureState::from_populations(pops))
        .unwrap_or_else(|| {
            Err(Error::Unavailable(format!(
                "no tabulated optimum for n = {n}, k = {k}; run the optimizer"
            )))
        })
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
