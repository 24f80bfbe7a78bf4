//! Interference patterns as trigonometric polynomials, their exact moments,
//! and the moment-ratio certifiers `R_n = M_n / M_1^(n-1)`.
//!
//! A pattern over `d` levels is stored as
//!
//! ```text
//! p(t) = c0 + 2 Σ_{m=1}^{d-1} Re(c_m e^{-imt})
//! ```
//!
//! Moments are the DC coefficient of `p(t)^n`, obtained by discrete
//! convolution of the two-sided coefficient array. No quadrature is involved.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{check_dims, DensityMatrix, PureState};

/// Slack allowed when checking `p(t) ∈ [0, 1]`.
pub const PATTERN_RANGE_TOL: f64 = 1e-9;

/// Coefficients of a real trigonometric polynomial with integer frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCoefficients {
    c0: f64,
    /// `c[m - 1]` is the coefficient of frequency `m`.
    c: Vec<Complex64>,
}

impl PatternCoefficients {
    pub fn new(c0: f64, c: Vec<Complex64>) -> Result<Self> {
        if !c0.is_finite() || c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("pattern coefficients must be finite".into()));
        }
        Ok(Self { c0, c })
    }

    /// A flat pattern `p(t) = level` over `dim` levels.
    pub fn constant(level: f64, dim: usize) -> Self {
        Self {
            c0: level,
            c: vec![Complex64::new(0.0, 0.0); dim.saturating_sub(1)],
        }
    }

    /// Number of levels `d`; frequencies run over `1..d`.
    pub fn dim(&self) -> usize {
        self.c.len() + 1
    }

    pub fn dc(&self) -> f64 {
        self.c0
    }

    pub fn harmonics(&self) -> &[Complex64] {
        &self.c
    }

    /// `c_m` for `m ≥ 1`; zero past the highest frequency.
    pub fn harmonic(&self, m: usize) -> Complex64 {
        assert!(m >= 1, "harmonic index starts at 1");
        self.c.get(m - 1).copied().unwrap_or_default()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let ac: f64 = self
            .c
            .iter()
            .enumerate()
            .map(|(i, cm)| (cm * Complex64::from_polar(1.0, -((i + 1) as f64) * t)).re)
            .sum();
        self.c0 + 2.0 * ac
    }

    /// Values on the uniform grid `t_j = 2πj/n`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|j| {
                let t = TAU * j as f64 / n as f64;
                (t, self.evaluate(t))
            })
            .collect()
    }

    /// Two-sided coefficient array `a_j`, `j = -(d-1)..=(d-1)`, with
    /// `p(t) = Σ_j a_j e^{-ijt}`; index `j + d - 1`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut a = vec![Complex64::new(0.0, 0.0); 2 * d - 1];
        a[d - 1] = Complex64::new(self.c0, 0.0);
        for (i, cm) in self.c.iter().enumerate() {
            let m = i + 1;
            a[d - 1 + m] = *cm;
            a[d - 1 - m] = cm.conj();
        }
        a
    }

    /// Pattern under the reversed Hamiltonian `H → −H`.
    pub fn time_reversed(&self) -> Self {
        Self {
            c0: self.c0,
            c: self.c.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Frequencies scaled by `s`: the pattern obtained when level `p` is
    /// moved to `s·p`.
    pub fn dilated(&self, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("dilation factor must be positive".into()));
        }
        let d = self.dim();
        let new_d = s * (d - 1) + 1;
        let mut c = vec![Complex64::new(0.0, 0.0); new_d - 1];
        for (i, cm) in self.c.iter().enumerate() {
            c[s * (i + 1) - 1] = *cm;
        }
        Ok(Self { c0: self.c0, c })
    }

    /// Pads with zero harmonics up to `dim` levels.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut c = self.c.clone();
        c.resize(dim - 1, Complex64::new(0.0, 0.0));
        Ok(Self { c0: self.c0, c })
    }

    /// Minimum and maximum over a uniform grid of `samples` points.
    pub fn extremes(&self, samples: usize) -> (f64, f64) {
        self.sample(samples.max(1))
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, p)| (lo.min(p), hi.max(p)))
    }

    /// Checks `c0 ∈ [0, 1]` and `p(t) ∈ [0, 1]` on `16·d` sample points.
    pub fn check_physical(&self) -> Result<()> {
        if !(-PATTERN_RANGE_TOL..=1.0 + PATTERN_RANGE_TOL).contains(&self.c0) {
            return Err(Error::InvalidArgument(format!("DC term {} outside [0, 1]", self.c0)));
        }
        let (lo, hi) = self.extremes(16 * self.dim());
        if lo < -PATTERN_RANGE_TOL || hi > 1.0 + PATTERN_RANGE_TOL {
            return Err(Error::InvalidArgument(format!(
                "pattern leaves [0, 1]: min {lo}, max {hi}"
            )));
        }
        Ok(())
    }
}

/// Pattern `Tr(e^{-iHt} ρ e^{iHt} σ)` of state `rho` under measurement `sigma`.
pub fn pattern_from_states(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<PatternCoefficients> {
    check_dims(rho.dim(), sigma.dim())?;
    let d = rho.dim();
    let c0 = (0..d).map(|p| (rho.get(p, p) * sigma.get(p, p)).re).sum();
    let c = (1..d)
        .map(|m| (m..d).map(|p| rho.get(p, p - m) * sigma.get(p - m, p)).sum())
        .collect();
    Ok(PatternCoefficients { c0, c })
}

/// Pattern `|⟨χ|U(t)|ψ⟩|²` of a pure state under a pure projection.
pub fn pattern_from_pure(psi: &PureState, chi: &PureState) -> Result<PatternCoefficients> {
    check_dims(psi.dim(), chi.dim())?;
    // ψ_p χ_p^* carries everything the pattern depends on.
    let z: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .zip(chi.amplitudes())
        .map(|(a, b)| a * b.conj())
        .collect();
    Ok(pattern_from_products(&z))
}

/// Pattern with `c_m = Σ_p z_{p+m} z_p^*`.
pub(crate) fn pattern_from_products(z: &[Complex64]) -> PatternCoefficients {
    let d = z.len();
    let c0 = z.iter().map(|v| v.norm_sqr()).sum();
    let c = (1..d)
        .map(|m| (0..d - m).map(|p| z[p + m] * z[p].conj()).sum())
        .collect();
    PatternCoefficients { c0, c }
}

/// Phase-free overlap parametrization: `α_p e^{iφ_p} = ψ_p χ_p^*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapVector {
    alpha: Vec<f64>,
    phi: Vec<f64>,
}

impl OverlapVector {
    pub fn new(alpha: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        check_dims(alpha.len(), phi.len())?;
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("empty overlap vector".into()));
        }
        if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument("overlaps must be nonnegative".into()));
        }
        let total: f64 = alpha.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "overlaps sum to {total}, above the Cauchy-Schwarz bound 1"
            )));
        }
        Ok(Self { alpha, phi })
    }

    /// Overlaps with all phases zero.
    pub fn real(alpha: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        Self::new(alpha, vec![0.0; n])
    }

    /// Overlaps of a pure state and projection.
    pub fn from_states(psi: &PureState, chi: &PureState) -> Result<Self> {
        check_dims(psi.dim(), chi.dim())?;
        let (alpha, phi) = psi
            .amplitudes()
            .iter()
            .zip(chi.amplitudes())
            .map(|(a, b)| {
                let z = a * b.conj();
                (z.norm(), z.arg())
            })
            .unzip();
        Self::new(alpha, phi)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

/// `c0 = Σ α_p²`, `c_m = Σ_p α_{p+m} α_p e^{i(φ_{p+m} − φ_p)}`.
pub fn pattern_from_overlaps(ov: &OverlapVector) -> PatternCoefficients {
    let z: Vec<Complex64> = ov
        .alpha
        .iter()
        .zip(&ov.phi)
        .map(|(&a, &f)| Complex64::from_polar(a, f))
        .collect();
    pattern_from_products(&z)
}

/// Moments `M_1..M_nmax` of one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    moments: Vec<f64>,
}

impl MomentVector {
    /// `M_n`, for `1 ≤ n ≤ max_order()`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.moments.get(i)).copied()
    }

    pub fn max_order(&self) -> usize {
        self.moments.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }

    /// `R_n = M_n / M_1^(n-1)`.
    pub fn ratio(&self, n: usize) -> Result<f64> {
        let m1 = self.moments.first().copied().unwrap_or(0.0);
        let mn = self
            .get(n)
            .ok_or_else(|| Error::InvalidArgument(format!("moment order {n} not computed")))?;
        ratio_of(mn, m1, n)
    }
}

fn ratio_of(mn: f64, m1: f64, n: usize) -> Result<f64> {
    if m1 <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(mn / m1.powi(n as i32 - 1))
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// DC coefficient of the product of two centered spectra.
fn dc_of_product(a: &[Complex64], b: &[Complex64]) -> f64 {
    // a has offset (a.len()-1)/2, b likewise; DC term pairs a_j with b_{-j}.
    let ha = (a.len() - 1) / 2;
    let hb = (b.len() - 1) / 2;
    let h = ha.min(hb);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=2 * h {
        acc += a[ha - h + j] * b[hb + h - j];
    }
    acc.re
}

/// Exact moments `M_1..M_nmax`.
pub fn moments(pat: &PatternCoefficients, n_max: usize) -> Result<MomentVector> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    let a = pat.spectrum();
    let mut out = Vec::with_capacity(n_max);
    out.push(pat.c0);
    let mut power = a.clone();
    for _ in 2..=n_max {
        out.push(dc_of_product(&power, &a));
        if out.len() < n_max {
            power = convolve(&power, &a);
        }
    }
    Ok(MomentVector { moments: out })
}

/// Exact moment `M_n = (1/2π)∫ p(t)^n dt`.
pub fn moment(pat: &PatternCoefficients, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    Ok(*moments(pat, n)?.moments.last().expect("n >= 1"))
}

/// Certifier `R_n = M_n / M_1^(n-1)`, `n ≥ 2`.
pub fn ratio(pat: &PatternCoefficients, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("ratio order {n} must be at least 2")));
    }
    let mv = moments(pat, n)?;
    mv.ratio(n)
}

/// `M_n` as the mean of `p(t_j)^n` over `t_j = 2πj/N`. Exact once no nonzero
/// frequency of `p^n` can fold onto DC; used as an independent cross-check.
pub fn moment_by_sampling(pat: &PatternCoefficients, n: usize, samples: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    let required = 2 * n * (pat.dim() - 1);
    if samples <= required || samples == 0 {
        return Err(Error::Aliasing {
            samples,
            order: n,
            dim: pat.dim(),
            required,
        });
    }
    let sum: f64 = (0..samples)
        .map(|j| pat.evaluate(TAU * j as f64 / samples as f64).powi(n as i32))
        .sum();
    Ok(sum / samples as f64)
}

/// Least-squares pattern recovered from samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFit {
    pub pattern: PatternCoefficients,
    /// Root-mean-square residual over the samples.
    pub residual_rms: f64,
    /// Ratio of extreme singular values of the design matrix.
    pub condition_number: f64,
}

/// Fits `c0`, `Re c_m`, `Im c_m` for `m < dim` to `(t, p)` samples by
/// ordinary least squares.
pub fn fit_pattern_from_samples(samples: &[(f64, f64)], dim: usize) -> Result<PatternFit> {
    if dim == 0 {
        return Err(Error::InvalidArgument("pattern dimension must be positive".into()));
    }
    let unknowns = 2 * dim - 1;
    if samples.len() < unknowns {
        return Err(Error::RankDeficient(format!(
            "{} samples for {unknowns} unknowns",
            samples.len()
        )));
    }
    if let Some((t, _)) = samples.iter().find(|(t, _)| !(0.0..TAU).contains(t)) {
        return Err(Error::InvalidArgument(format!("sample time {t} outside [0, 2π)")));
    }
    let design = DMatrix::from_fn(samples.len(), unknowns, |r, col| {
        let t = samples[r].0;
        match col {
            0 => 1.0,
            c if c % 2 == 1 => 2.0 * (c.div_ceil(2) as f64 * t).cos(),
            c => 2.0 * ((c / 2) as f64 * t).sin(),
        }
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(format!(
            "singular values span [{smin:e}, {smax:e}]; too few distinct sample times"
        )));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let resid = &design * &x - &rhs;
    let residual_rms = (resid.norm_squared() / samples.len() as f64).sqrt();
    let c = (1..dim)
        .map(|m| Complex64::new(x[2 * m - 1], x[2 * m]))
        .collect();
    Ok(PatternFit {
        pattern: PatternCoefficients { c0: x[0], c },
        residual_rms,
        condition_number: smax / smin,
    })
}
