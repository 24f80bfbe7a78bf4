//! Proven certification thresholds and closed-form results for `R_3`.
//!
//! With zero phases and `Σ α_p = 1`, grouping overlaps by frequency,
//! `D_0 = Σ α_p²` and `D_m = Σ_p α_{p+m} α_p`, turns `R_3` into the cubic
//!
//! ```text
//! R_3 = 6 D_0 (1/6 + Σ_i D̃_i² + Σ_{i+j=k} D̃_i D̃_j D̃_k),   D̃_i = D_i / D_0
//! ```
//!
//! where the triple sum runs over ordered pairs `(i, j)`. For fixed `D_0`
//! the normalization `D_0 (1 + 2 Σ D̃_i) = 1` plus sum-of-squares
//! inequalities bound the `D̃` to a polytope on which `R_3` is convex, so its
//! maximum sits on a vertex. [`vertex_table`] lists those vertices for the
//! cases worked out analytically.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `R_3` over `C_1`, `C_2`, `C_3` as exact fractions `(num, den)`.
/// Exceeding entry `k - 1` certifies at least `(k+1)`-coherence.
pub const R3_THRESHOLDS: [(i64, i64); 3] = [(1, 1), (5, 4), (179, 96)];

/// Proven maximum of `R_3` over `C_k`, for `k ≤ 3`.
pub fn r3_threshold(k: usize) -> Option<Ratio<i64>> {
    k.checked_sub(1)
        .and_then(|i| R3_THRESHOLDS.get(i))
        .map(|&(n, d)| Ratio::new(n, d))
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Outcome of checking an `R_n` value against the proven thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifierResult {
    pub n: usize,
    pub value: f64,
    /// The state is provably at least this coherent.
    pub certified_level: usize,
    /// Threshold that was strictly exceeded, if any.
    pub threshold_used: Option<f64>,
    /// Threshold that would grant the next level, if one is proven.
    pub next_threshold: Option<f64>,
}

/// Certifies coherence from an `R_3` value using strict comparison against
/// `1`, `5/4` and `179/96`.
pub fn certify_r3(value: f64) -> Result<CertifierResult> {
    if !(value >= 0.0) {
        return Err(Error::InvalidArgument(format!("R_3 value {value} must be nonnegative")));
    }
    let mut level = 1;
    for k in 1..=R3_THRESHOLDS.len() {
        let t = ratio_to_f64(r3_threshold(k).expect("tabulated"));
        if value > t {
            level = k + 1;
        }
    }
    Ok(CertifierResult {
        n: 3,
        value,
        certified_level: level,
        threshold_used: r3_threshold(level - 1).map(ratio_to_f64),
        next_threshold: r3_threshold(level).map(ratio_to_f64),
    })
}

/// Frequency-grouped overlaps: `D_0` and `D̃_i = D_i / D_0` for `i = 1..d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DVector {
    d0: f64,
    dtilde: Vec<f64>,
}

const D_TOL: f64 = 1e-12;

impl DVector {
    /// `dtilde[i - 1]` is `D̃_i`; the level count is `dtilde.len() + 1`.
    pub fn new(d0: f64, dtilde: Vec<f64>) -> Result<Self> {
        let d = dtilde.len() + 1;
        if !(d0 >= 1.0 / d as f64 - D_TOL && d0 <= 1.0 + D_TOL) {
            return Err(Error::InvalidArgument(format!("D_0 = {d0} outside [1/{d}, 1]")));
        }
        let cap = (d - 1) as f64 / 2.0;
        if let Some(x) = dtilde.iter().find(|&&x| !(x >= -D_TOL && x <= cap + D_TOL)) {
            return Err(Error::InvalidArgument(format!("D̃ = {x} outside [0, {cap}]")));
        }
        Ok(Self { d0, dtilde })
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// `D̃_i`, zero outside the stored range.
    pub fn dtilde(&self, i: usize) -> f64 {
        if i == 0 {
            return 1.0;
        }
        self.dtilde.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn dtilde_all(&self) -> &[f64] {
        &self.dtilde
    }

    pub fn dim(&self) -> usize {
        self.dtilde.len() + 1
    }

    /// `D_0 (1 + 2 Σ D̃_i) − 1`; zero for vectors built from normalized overlaps.
    pub fn normalization_defect(&self) -> f64 {
        self.d0 * (1.0 + 2.0 * self.dtilde.iter().sum::<f64>()) - 1.0
    }
}

/// `D`-parametrization of overlaps summing to one.
pub fn d_from_alpha(alpha: &[f64]) -> Result<DVector> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidArgument("overlaps must be nonnegative".into()));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("overlaps sum to {total}, expected 1")));
    }
    let d = alpha.len();
    let d0: f64 = alpha.iter().map(|a| a * a).sum();
    let dtilde = (1..d)
        .map(|m| (0..d - m).map(|p| alpha[p + m] * alpha[p]).sum::<f64>() / d0)
        .collect();
    DVector::new(d0, dtilde)
}

/// `R_3` as a polynomial in `D_0` and the `D̃_i`.
pub fn r3_from_d(dv: &DVector) -> f64 {
    let x = &dv.dtilde;
    let d = x.len();
    let quad: f64 = x.iter().map(|v| v * v).sum();
    let mut cubic = 0.0;
    for i in 1..=d {
        for j in 1..=d - i {
            if i + j <= d {
                cubic += x[i - 1] * x[j - 1] * x[i + j - 1];
            }
        }
    }
    6.0 * dv.d0 * (1.0 / 6.0 + quad + cubic)
}

/// The cases for which vertex tables are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexCase {
    /// Three adjacent levels in a three-level space.
    K3D3,
    /// Three levels at generic spacing, here `(0, 1, 4)`.
    K3GeneralGeneric,
    /// Three levels with gaps in ratio 1:2, here `(0, 1, 3)`.
    K3GeneralRatio12,
    /// Four adjacent levels in a four-level space.
    K4D4,
}

impl VertexCase {
    pub const ALL: [VertexCase; 4] = [
        VertexCase::K3D3,
        VertexCase::K3GeneralGeneric,
        VertexCase::K3GeneralRatio12,
        VertexCase::K4D4,
    ];

    /// Frequencies of the free `D̃` variables, in the order used for
    /// Hessians and vertex coordinates.
    pub fn frequencies(self) -> &'static [usize] {
        match self {
            VertexCase::K3D3 => &[1, 2],
            VertexCase::K3GeneralGeneric => &[1, 3, 4],
            VertexCase::K3GeneralRatio12 => &[1, 2, 3],
            VertexCase::K4D4 => &[1, 2, 3],
        }
    }

    /// Populated levels of a representative state.
    pub fn levels(self) -> &'static [usize] {
        match self {
            VertexCase::K3D3 => &[0, 1, 2],
            VertexCase::K3GeneralGeneric => &[0, 1, 4],
            VertexCase::K3GeneralRatio12 => &[0, 1, 3],
            VertexCase::K4D4 => &[0, 1, 2, 3],
        }
    }

    /// Level count of the `DVector`s belonging to this case.
    pub fn dim(self) -> usize {
        self.levels().iter().max().expect("nonempty") + 1
    }

    /// Number of populated levels.
    pub fn populated(self) -> usize {
        self.levels().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            VertexCase::K3D3 => "k3d3",
            VertexCase::K3GeneralGeneric => "k3_general_generic",
            VertexCase::K3GeneralRatio12 => "k3_general_ratio12",
            VertexCase::K4D4 => "k4d4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown vertex case `{s}`")))
    }

    /// Lists every violated constraint of the case's outer polytope at `dv`.
    pub fn violations(self, dv: &DVector, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if dv.dim() != self.dim() {
            out.push(format!("expected {} levels, found {}", self.dim(), dv.dim()));
            return out;
        }
        let d0 = dv.d0();
        let x = |f: usize| dv.dtilde(f);
        let mut need = |ok: bool, what: &str| {
            if !ok {
                out.push(what.to_string());
            }
        };
        let d0_min = 1.0 / self.populated() as f64;
        need(d0 >= d0_min - tol && d0 <= 1.0 + tol, "D_0 range");
        let freqs = self.frequencies();
        for f in 1..self.dim() {
            if !freqs.contains(&f) {
                need(x(f).abs() <= tol, "unpopulated frequency must vanish");
            }
        }
        let sum: f64 = freqs.iter().map(|&f| x(f)).sum();
        need((sum - (1.0 - d0) / (2.0 * d0)).abs() <= tol, "normalization plane");
        let half_floor = ((1.0 - 2.0 * d0) / (4.0 * d0)).max(0.0);
        match self {
            VertexCase::K3D3 => {
                need(x(2) >= half_floor - tol && x(2) <= 0.5 + tol, "D̃_2 bounds");
                need(x(1) >= -tol && x(1) <= 1.0 + tol, "D̃_1 bounds");
                need(1.0 - 2.0 * x(1) + 2.0 * x(2) >= -tol, "1 - 2D̃_1 + 2D̃_2 >= 0");
            }
            VertexCase::K3GeneralGeneric | VertexCase::K3GeneralRatio12 => {
                for &f in freqs {
                    need(x(f) >= half_floor - tol && x(f) <= 0.5 + tol, "cube bounds");
                }
            }
            VertexCase::K4D4 => {
                let third_floor = ((1.0 - 3.0 * d0) / (6.0 * d0)).max(0.0);
                need(x(2) >= half_floor - tol && x(2) <= 0.5 + tol, "D̃_2 bounds");
                need(x(3) >= third_floor - tol && x(3) <= 0.5 + tol, "D̃_3 bounds");
                need(x(1) >= -tol && x(1) <= 1.0 + tol, "D̃_1 bounds");
                need(
                    1.0 - 2.0 * x(1) + 2.0 * x(2) - 2.0 * x(3) >= -tol,
                    "1 - 2D̃_1 + 2D̃_2 - 2D̃_3 >= 0",
                );
            }
        }
        out
    }

    pub fn contains(self, dv: &DVector, tol: f64) -> bool {
        self.violations(dv, tol).is_empty()
    }
}

impl fmt::Display for VertexCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Vertex coordinate as a function of `D_0`: `(a + b·D_0) / (c·D_0)`, or a
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordExpr {
    Const(f64),
    OverD0 { a: f64, b: f64, c: f64 },
}

impl CoordExpr {
    const fn over(a: f64, b: f64, c: f64) -> Self {
        CoordExpr::OverD0 { a, b, c }
    }

    pub fn eval(self, d0: f64) -> f64 {
        match self {
            CoordExpr::Const(v) => v,
            CoordExpr::OverD0 { a, b, c } => (a + b * d0) / (c * d0),
        }
    }
}

impl fmt::Display for CoordExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CoordExpr::Const(v) => write!(f, "{v}"),
            CoordExpr::OverD0 { a, b, c } => {
                if b == 0.0 {
                    write!(f, "{a}/({c} D0)")
                } else {
                    let sign = if b < 0.0 { '-' } else { '+' };
                    let mag = b.abs();
                    if mag == 1.0 {
                        write!(f, "({a} {sign} D0)/({c} D0)")
                    } else {
                        write!(f, "({a} {sign} {mag} D0)/({c} D0)")
                    }
                }
            }
        }
    }
}

/// One vertex family of a case's polytope, valid over a `D_0` interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub case: VertexCase,
    /// Row of the case's table; permutations of one row share it.
    pub row: usize,
    pub d0_range: (f64, f64),
    /// `(frequency, D̃ expression)` pairs.
    pub coords: Vec<(usize, CoordExpr)>,
    /// Largest `R_3` over the `D_0` range, and where it is attained.
    pub r3_max: f64,
    pub d0_at_max: f64,
}

impl VertexRecord {
    pub fn point(&self, d0: f64) -> Result<DVector> {
        let mut dtilde = vec![0.0; self.case.dim() - 1];
        for &(f, e) in &self.coords {
            dtilde[f - 1] = e.eval(d0);
        }
        DVector::new(d0, dtilde)
    }

    pub fn r3_at(&self, d0: f64) -> Result<f64> {
        Ok(r3_from_d(&self.point(d0)?))
    }
}

const HALF: CoordExpr = CoordExpr::Const(0.5);
const ZERO: CoordExpr = CoordExpr::Const(0.0);
/// `(1 − D_0)/(2 D_0)`: the whole normalization budget on one variable.
const FULL: CoordExpr = CoordExpr::over(1.0, -1.0, 2.0);
/// `(1 − 2 D_0)/(4 D_0)`.
const QUARTER_FLOOR: CoordExpr = CoordExpr::over(1.0, -2.0, 4.0);

type Row = (f64, f64, Vec<CoordExpr>);

fn rows(case: VertexCase) -> Vec<Row> {
    const THIRD: f64 = 1.0 / 3.0;
    match case {
        VertexCase::K3D3 => vec![
            (0.5, 1.0, vec![FULL, ZERO]),
            (THIRD, 0.5, vec![CoordExpr::over(1.0, -2.0, 2.0), HALF]),
            (THIRD, 0.5, vec![CoordExpr::over(1.0, 0.0, 4.0), QUARTER_FLOOR]),
        ],
        VertexCase::K3GeneralGeneric | VertexCase::K3GeneralRatio12 => vec![
            (0.5, 1.0, vec![ZERO, ZERO, FULL]),
            (THIRD, 0.5, vec![QUARTER_FLOOR, QUARTER_FLOOR, HALF]),
        ],
        VertexCase::K4D4 => vec![
            (0.5, 1.0, vec![FULL, ZERO, ZERO]),
            (THIRD, 0.5, vec![CoordExpr::over(1.0, -2.0, 2.0), HALF, ZERO]),
            (THIRD, 0.5, vec![QUARTER_FLOOR, QUARTER_FLOOR, HALF]),
            (THIRD, 0.5, vec![CoordExpr::over(1.0, 0.0, 4.0), QUARTER_FLOOR, ZERO]),
            (0.25, THIRD, vec![CoordExpr::over(1.0, -3.0, 2.0), HALF, HALF]),
            (0.25, THIRD, vec![CoordExpr::over(2.0, -3.0, 6.0), HALF, CoordExpr::over(1.0, -3.0, 6.0)]),
            (0.25, THIRD, vec![QUARTER_FLOOR, QUARTER_FLOOR, HALF]),
        ],
    }
}

fn distinct_permutations(exprs: &[CoordExpr]) -> Vec<Vec<CoordExpr>> {
    fn go(rest: &mut Vec<CoordExpr>, cur: &mut Vec<CoordExpr>, out: &mut Vec<Vec<CoordExpr>>) {
        if rest.is_empty() {
            if !out.contains(cur) {
                out.push(cur.clone());
            }
            return;
        }
        for i in 0..rest.len() {
            let e = rest.remove(i);
            cur.push(e);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, e);
        }
    }
    let mut out = Vec::new();
    go(&mut exprs.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Vertex families of the case's polytope with the maximum of `R_3` over
/// each family's `D_0` range. For the general three-level cases the
/// constraints are symmetric in the variables, so every distinct
/// permutation of a row is listed as its own record.
pub fn vertex_table(case: VertexCase) -> Vec<VertexRecord> {
    let freqs = case.frequencies();
    let symmetric = matches!(case, VertexCase::K3GeneralGeneric | VertexCase::K3GeneralRatio12);
    let mut out = Vec::new();
    for (row, (lo, hi, exprs)) in rows(case).into_iter().enumerate() {
        let variants = if symmetric {
            distinct_permutations(&exprs)
        } else {
            vec![exprs]
        };
        for coords in variants {
            let mut rec = VertexRecord {
                case,
                row,
                d0_range: (lo, hi),
                coords: freqs.iter().copied().zip(coords).collect(),
                r3_max: f64::NAN,
                d0_at_max: f64::NAN,
            };
            let f = |d0: f64| rec.r3_at(d0).unwrap_or(f64::NEG_INFINITY);
            let (arg, val) = maximize_1d(f, lo, hi);
            rec.r3_max = val;
            rec.d0_at_max = arg;
            out.push(rec);
        }
    }
    out
}

/// Largest `r3_max` of each table row.
pub fn row_maxima(records: &[VertexRecord]) -> Vec<f64> {
    let rows = records.iter().map(|r| r.row).max().map_or(0, |m| m + 1);
    (0..rows)
        .map(|row| {
            records
                .iter()
                .filter(|r| r.row == row)
                .map(|r| r.r3_max)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Maximum of a smooth function on `[lo, hi]`: dense grid, then
/// golden-section refinement of the best bracket to `1e-10`.
pub fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const GRID: usize = 2000;
    let h = (hi - lo) / GRID as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=GRID {
        let v = f(lo + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + best_i.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best_i + 1) as f64 * h).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let candidates = [(lo + best_i as f64 * h, best), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// Hessian of `R_3` in the case's free `D̃` variables, divided by `12 D_0`:
/// `H_ab = δ_ab + D̃_{f_a + f_b} + [a ≠ b] D̃_{|f_a − f_b|}`.
pub fn hessian(dv: &DVector, case: VertexCase) -> DMatrix<f64> {
    let f = case.frequencies();
    DMatrix::from_fn(f.len(), f.len(), |a, b| {
        let mut h = dv.dtilde(f[a] + f[b]);
        if a == b {
            h += 1.0;
        } else {
            h += dv.dtilde(f[a].abs_diff(f[b]));
        }
        h
    })
}

/// Leading principal minors of [`hessian`]; `dv` must lie in the case's polytope.
pub fn hessian_principal_minors(dv: &DVector, case: VertexCase) -> Result<Vec<f64>> {
    let v = case.violations(dv, 1e-9);
    if !v.is_empty() {
        return Err(Error::Domain(format!("{case}: {}", v.join(", "))));
    }
    let h = hessian(dv, case);
    Ok((1..=h.nrows())
        .map(|m| h.view((0, 0), (m, m)).clone_owned().determinant())
        .collect())
}

/// Number of frequency pairs contributing to the quadratic term of `R_3(W_k)`.
pub fn w_pair_count(k: i128) -> i128 {
    k * (k - 1) * (2 * k - 1) / 6
}

/// Number of frequency triples contributing to the cubic term of `R_3(W_k)`.
pub fn w_triple_count(k: i128) -> i128 {
    k * (k - 1) * (k - 2) * (2 - 7 * k + 11 * k * k) / 40
}

/// Exact `R_3(W_k, W_k) = (4 + 5k² + 11k⁴) / (20k³)`.
pub fn r3_w_exact(k: usize) -> Result<Ratio<i128>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k as i128;
    Ok(Ratio::new(4 + 5 * k * k + 11 * k.pow(4), 20 * k.pow(3)))
}

/// [`r3_w_exact`] as a float.
pub fn r3_w_closed_form(k: usize) -> Result<f64> {
    let r = r3_w_exact(k)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

/// `R_3(W_k) = 1/k + 6A/k³ + 2B/k⁴` from the pair and triple counts.
pub fn r3_w_from_counts(k: usize) -> Result<Ratio<i128>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let kk = k as i128;
    Ok(Ratio::new(1, kk)
        + Ratio::new(6 * w_pair_count(kk), kk.pow(3))
        + Ratio::new(2 * w_triple_count(kk), kk.pow(4)))
}

fn check_levels(k: usize, q: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    if q == 0 || q > k {
        return Err(Error::InvalidArgument(format!("q = {q} outside 1..={k}")));
    }
    Ok(())
}

/// Mixedness `(k − q)/(k − 1)` above which the `k`-level Werner-like state
/// is at most `q`-coherent.
pub fn lambda_dec(k: usize, q: usize) -> Result<f64> {
    check_levels(k, q)?;
    Ok((k - q) as f64 / (k - 1) as f64)
}

/// Mixedness above which the Werner-like pattern under `|W_k⟩` projection
/// is reproducible by `q`-coherent mixtures. Equals [`lambda_dec`]; only
/// valid for that projection.
pub fn lambda_patt(k: usize, q: usize) -> Result<f64> {
    lambda_dec(k, q)
}

/// Largest value `q/k` any `C_q` state can reach in a pattern under `|W_k⟩`.
pub fn pattern_peak_bound(q: usize, k: usize) -> Result<f64> {
    if q == 0 || q > k {
        return Err(Error::InvalidArgument(format!("q = {q} outside 1..={k}")));
    }
    Ok(q as f64 / k as f64)
}
