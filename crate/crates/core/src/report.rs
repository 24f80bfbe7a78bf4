//! Batch front end: state specs, pattern input, reference tables and the
//! versioned output documents written by the `cohcert` binary.
//!
//! Every document carries `schema_version`, the master seed, a full echo of
//! its parameters and any warnings. Data sections contain no timestamps, so
//! identical parameters give byte-identical output.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use crate::approx::{best_q_approximation, reproducibility_verdict, MixtureApprox, Verdict};
use crate::bounds::{
    certify_r3, hessian_principal_minors, lambda_dec, r3_threshold, r3_w_exact, row_maxima,
    vertex_table, CertifierResult, DVector, VertexCase, VertexRecord,
};
use crate::error::{Error, Result};
use crate::optim::{stream_rng, OptimizationConfig};
use crate::pattern::{fit_pattern_from_samples, moments, pattern_from_states, PatternCoefficients};
use crate::quantum::{
    w_state, werner_state, DensityMatrix, HarmonicBasis, PureState, WernerParams, TABULATED_OPTIMA,
};
use crate::robustness::{tolerance_sweep, SweepConfig, ToleranceSweep};
use crate::thresholds::{
    decoherence_threshold_table, growth_scan, lambda_threshold, maximize_rn_over_ck, w_state_rn,
    werner_rn, GrowthScan, Projection, RnMaximum, ThresholdRecord,
};

pub const SCHEMA_VERSION: &str = "1";

/// Highest order for which moments are reported.
pub const MAX_REPORTED_ORDER: usize = 5;

/// Published `(n, k, best value, W_k value)` for `R_n` over `C_k`.
pub const REFERENCE_RN: &[(usize, usize, f64, f64)] = &[
    (3, 2, 1.25, 1.25),
    (3, 3, 1.77, 1.74),
    (3, 4, 2.32, 2.27),
    (3, 5, 2.88, 2.80),
    (4, 2, 2.19, 2.19),
    (4, 3, 4.61, 4.56),
    (4, 4, 8.02, 7.90),
    (4, 5, 12.42, 12.21),
    (5, 2, 3.94, 3.94),
    (5, 3, 12.39, 12.28),
    (5, 4, 28.71, 28.39),
    (5, 5, 55.52, 54.84),
];

/// Published `(k, R_3 threshold, best known)` for `C_k`.
pub const REFERENCE_R3_BOUNDS: &[(usize, f64, f64)] = &[(1, 1.0, 1.0), (2, 1.25, 1.25), (3, 1.86, 1.77)];

/// Published maxima per vertex-table row.
pub fn reference_vertex_maxima(case: VertexCase) -> &'static [f64] {
    match case {
        VertexCase::K3D3 => &[1.25, 1.58, 1.86],
        VertexCase::K3GeneralGeneric => &[1.25, 1.27],
        VertexCase::K3GeneralRatio12 => &[1.25, 1.33],
        VertexCase::K4D4 => &[1.0, 1.58, 1.25, 1.86, 1.33, 2.44, 1.93],
    }
}

/// Published `λ_thr` rows for `n = 3, 4, 5` over `k = 3..=10`.
pub const REFERENCE_LAMBDA_THR: [[f64; 8]; 3] = [
    [0.18, 0.13, 0.10, 0.08, 0.06, 0.06, 0.05, 0.04],
    [0.28, 0.19, 0.14, 0.11, 0.09, 0.08, 0.07, 0.06],
    [0.33, 0.22, 0.16, 0.13, 0.11, 0.09, 0.08, 0.07],
];

/// Published `λ_dec(k − 1)` for `k = 3..=10`, rounded.
pub const REFERENCE_LAMBDA_DEC: [f64; 8] = [0.5, 0.33, 0.25, 0.2, 0.17, 0.14, 0.13, 0.11];

fn reference_best(n: usize, k: usize) -> Option<f64> {
    if k == 1 {
        return Some(1.0);
    }
    REFERENCE_RN.iter().find(|r| r.0 == n && r.1 == k).map(|r| r.2)
}

/// Compact state grammar: `W:k`, `PSI:k`, `werner:k:lambda`, `vec:a0,a1,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    /// Uniform superposition of `k` levels, measured with itself.
    W(usize),
    /// Optimal `R_3` state on `k` levels from the optimizer, measured with itself.
    Psi(usize),
    /// Werner-like state, measured with `|W_k⟩`.
    Werner { k: usize, lambda: f64 },
    /// Real amplitudes, normalized, measured with themselves.
    Vec(Vec<f64>),
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("state spec `{s}`: {why}"));
        let (head, rest) = s.split_once(':').ok_or_else(|| bad("expected KIND:ARGS"))?;
        let level = |v: &str| -> Result<usize> {
            let k: usize = v.trim().parse().map_err(|_| bad("level count must be a positive integer"))?;
            if k == 0 {
                return Err(bad("level count must be positive"));
            }
            Ok(k)
        };
        match head {
            "W" | "w" => Ok(StateSpec::W(level(rest)?)),
            "PSI" | "psi" | "Psi" => Ok(StateSpec::Psi(level(rest)?)),
            "werner" | "WERNER" => {
                let (k, lambda) = rest.split_once(':').ok_or_else(|| bad("expected werner:k:lambda"))?;
                let lambda: f64 = lambda.trim().parse().map_err(|_| bad("lambda must be a number"))?;
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(bad("lambda must lie in [0, 1]"));
                }
                Ok(StateSpec::Werner { k: level(k)?, lambda })
            }
            "vec" | "VEC" => {
                let amps = rest
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| bad("amplitudes must be numbers")))
                    .collect::<Result<Vec<f64>>>()?;
                if amps.iter().any(|a| !a.is_finite()) || amps.iter().all(|&a| a == 0.0) {
                    return Err(bad("amplitudes must be finite and not all zero"));
                }
                Ok(StateSpec::Vec(amps))
            }
            _ => Err(bad("unknown kind; use W, PSI, werner or vec")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::W(k) => write!(f, "W:{k}"),
            StateSpec::Psi(k) => write!(f, "PSI:{k}"),
            StateSpec::Werner { k, lambda } => write!(f, "werner:{k}:{lambda}"),
            StateSpec::Vec(a) => {
                let parts: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                write!(f, "vec:{}", parts.join(","))
            }
        }
    }
}

/// A state together with the measurement it is scored under.
#[derive(Debug, Clone)]
pub struct ResolvedState {
    pub rho: DensityMatrix,
    pub measurement: PureState,
    pub measurement_label: String,
    /// Set when resolving required the optimizer and it hit its cap.
    pub warning: Option<String>,
}

impl ResolvedState {
    pub fn pattern(&self) -> Result<PatternCoefficients> {
        pattern_from_states(&self.rho, &self.measurement.projector())
    }
}

impl StateSpec {
    pub fn resolve(&self, cfg: &OptimizationConfig) -> Result<ResolvedState> {
        let own = |psi: PureState, label: &str, warning| ResolvedState {
            rho: psi.projector(),
            measurement: psi,
            measurement_label: label.to_string(),
            warning,
        };
        match *self {
            StateSpec::W(k) => Ok(own(w_state(k)?, "self", None)),
            StateSpec::Psi(1) => Ok(own(PureState::basis(1, 0)?, "self", None)),
            StateSpec::Psi(k) => {
                let best = maximize_rn_over_ck(3, k, cfg)?;
                let warning = (!best.converged).then(|| format!("PSI:{k} optimizer did not converge"));
                Ok(own(PureState::from_populations(&best.alpha)?, "self", warning))
            }
            StateSpec::Werner { k, lambda } => Ok(ResolvedState {
                rho: werner_state(WernerParams::new(k, lambda)?, HarmonicBasis::new(k)?)?,
                measurement: w_state(k)?,
                measurement_label: format!("W:{k}"),
                warning: None,
            }),
            StateSpec::Vec(ref a) => Ok(own(PureState::from_real(a)?, "self", None)),
        }
    }
}

/// Where a pattern comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PatternSource {
    State(StateSpec),
    /// `(t, p)` samples and the level count to fit them with.
    Samples { label: String, samples: Vec<(f64, f64)>, dim: usize },
}

/// Reads `t,p` samples (radians, probabilities) from CSV with that header.
pub fn read_samples_csv(reader: impl Read) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "p" {
        return Err(Error::Parse(format!("expected header `t,p`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("row {}: `{}` is not a finite number", i + 2, &row[j])))
        };
        out.push((num(0)?, num(1)?));
    }
    if out.is_empty() {
        return Err(Error::Parse("no samples".into()));
    }
    Ok(out)
}

/// Output document wrapper.
#[derive(Debug, Clone, Serialize)]
pub struct Document<P: Serialize, D: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub params: P,
    pub warnings: Vec<String>,
    pub data: D,
}

impl<P: Serialize, D: Serialize + CsvTable> Document<P, D> {
    pub fn new(command: &'static str, seed: u64, params: P, warnings: Vec<String>, data: D) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, seed, params, warnings, data }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// CSV body preceded by `#` lines carrying the document header.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        writeln!(out, "# schema_version={}", self.schema_version)?;
        writeln!(out, "# command={}", self.command)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# params={}", serde_json::to_string(&self.params)?)?;
        for w in &self.warnings {
            writeln!(out, "# warning={w}")?;
        }
        let mut wtr = csv::Writer::from_writer(&mut out);
        wtr.write_record(self.data.csv_header())?;
        for row in self.data.csv_rows() {
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        drop(wtr);
        String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Tabular view of a data section.
pub trait CsvTable {
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

fn hdr(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn num(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub samples: usize,
    pub residual_rms: f64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderValue {
    pub n: usize,
    pub value: f64,
}

/// Level implied by comparing `R_n` with best known maxima. Only `R_3` has
/// proven thresholds; these levels are indicative.
#[derive(Debug, Clone, Serialize)]
pub struct InformationalLevel {
    pub n: usize,
    pub value: f64,
    pub indicated_level: usize,
    pub best_known_exceeded: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternReport {
    pub source: String,
    pub measurement: Option<String>,
    pub dim: usize,
    pub pattern: PatternCoefficients,
    pub fit: Option<FitSummary>,
    pub moments: Vec<OrderValue>,
    pub ratios: Vec<OrderValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyData {
    #[serde(flatten)]
    pub report: PatternReport,
    pub certificate: CertifierResult,
    pub informational: Vec<InformationalLevel>,
}

fn pattern_report(src: &PatternSource, cfg: &OptimizationConfig, warnings: &mut Vec<String>) -> Result<PatternReport> {
    let (source, measurement, pattern, fit) = match src {
        PatternSource::State(spec) => {
            let st = spec.resolve(cfg)?;
            warnings.extend(st.warning.clone());
            (spec.to_string(), Some(st.measurement_label.clone()), st.pattern()?, None)
        }
        PatternSource::Samples { label, samples, dim } => {
            let f = fit_pattern_from_samples(samples, *dim)?;
            if f.pattern.check_physical().is_err() {
                warnings.push("fitted pattern leaves [0, 1]".into());
            }
            let summary = FitSummary {
                samples: samples.len(),
                residual_rms: f.residual_rms,
                condition_number: f.condition_number,
            };
            (label.clone(), None, f.pattern, Some(summary))
        }
    };
    let mv = moments(&pattern, MAX_REPORTED_ORDER)?;
    let ratios = (2..=MAX_REPORTED_ORDER)
        .map(|n| Ok(OrderValue { n, value: mv.ratio(n)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternReport {
        source,
        measurement,
        dim: pattern.dim(),
        moments: mv.as_slice().iter().enumerate().map(|(i, &value)| OrderValue { n: i + 1, value }).collect(),
        ratios,
        pattern,
        fit,
    })
}

/// Moments `M_1..M_5` and ratios `R_2..R_5`.
pub fn moments_report(src: &PatternSource, cfg: &OptimizationConfig) -> Result<(PatternReport, Vec<String>)> {
    let mut warnings = Vec::new();
    let r = pattern_report(src, cfg, &mut warnings)?;
    Ok((r, warnings))
}

/// Moments plus the `R_3` certificate and indicative levels for `R_4`, `R_5`.
pub fn certify(src: &PatternSource, cfg: &OptimizationConfig) -> Result<(CertifyData, Vec<String>)> {
    let mut warnings = Vec::new();
    let report = pattern_report(src, cfg, &mut warnings)?;
    let r = |n: usize| report.ratios.iter().find(|o| o.n == n).expect("reported").value;
    let certificate = certify_r3(r(3))?;
    let informational = (4..=MAX_REPORTED_ORDER)
        .map(|n| {
            let value = r(n);
            let exceeded = (1..=5).filter_map(|k| reference_best(n, k).map(|b| (k, b))).rfind(|&(_, b)| value > b);
            InformationalLevel {
                n,
                value,
                indicated_level: exceeded.map_or(1, |(k, _)| k + 1),
                best_known_exceeded: exceeded.map(|(_, b)| b),
            }
        })
        .collect();
    Ok((CertifyData { report, certificate, informational }, warnings))
}

impl CsvTable for PatternReport {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["n", "moment", "ratio"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.moments
            .iter()
            .map(|m| {
                let ratio = self.ratios.iter().find(|r| r.n == m.n).map_or(String::new(), |r| num(r.value));
                vec![m.n.to_string(), num(m.value), ratio]
            })
            .collect()
    }
}

impl CsvTable for CertifyData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["n", "moment", "ratio", "level"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.report
            .csv_rows()
            .into_iter()
            .map(|mut row| {
                let n: usize = row[0].parse().expect("order");
                let level = if n == 3 {
                    self.certificate.certified_level.to_string()
                } else {
                    self.informational.iter().find(|i| i.n == n).map_or(String::new(), |i| i.indicated_level.to_string())
                };
                row.push(level);
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct R3BoundRow {
    pub k: usize,
    pub threshold_exact: String,
    pub threshold: f64,
    pub reference_threshold: f64,
    pub best_known: f64,
    pub reference_best_known: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexCaseSummary {
    pub case: VertexCase,
    pub records: Vec<VertexRecordView>,
    pub row_maxima: Vec<f64>,
    pub reference_row_maxima: Vec<f64>,
    pub overall_max: f64,
    pub reference_overall_max: f64,
    /// Every vertex satisfies the polytope constraints at 50 sampled `D_0`.
    pub constraints_hold: bool,
    pub hessian_samples: usize,
    pub min_leading_minor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexRecordView {
    pub row: usize,
    pub d0_range: (f64, f64),
    pub coords: Vec<(usize, String)>,
    pub r3_max: f64,
    pub d0_at_max: f64,
}

impl From<&VertexRecord> for VertexRecordView {
    fn from(r: &VertexRecord) -> Self {
        Self {
            row: r.row,
            d0_range: r.d0_range,
            coords: r.coords.iter().map(|(f, e)| (*f, e.to_string())).collect(),
            r3_max: r.r3_max,
            d0_at_max: r.d0_at_max,
        }
    }
}

/// Vertex table of `case` with constraint and convexity checks at
/// `hessian_samples` random points: convex combinations of the vertices
/// valid at a random `D_0`.
pub fn vertex_summary(case: VertexCase, hessian_samples: usize, seed: u64) -> Result<VertexCaseSummary> {
    let recs = vertex_table(case);
    let mut constraints_hold = true;
    for rec in &recs {
        let (lo, hi) = rec.d0_range;
        for i in 0..50 {
            let p = rec.point(lo + (hi - lo) * i as f64 / 49.0)?;
            constraints_hold &= case.contains(&p, 1e-12);
        }
    }
    let mut rng = stream_rng(seed, case as u64);
    let (d0_lo, d0_hi) = recs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.d0_range.0), b.max(r.d0_range.1)));
    let mut min_minor = f64::INFINITY;
    for _ in 0..hessian_samples {
        let d0 = rng.random_range(d0_lo..d0_hi);
        let active: Vec<DVector> = recs
            .iter()
            .filter(|r| r.d0_range.0 <= d0 && d0 <= r.d0_range.1)
            .map(|r| r.point(d0))
            .collect::<Result<_>>()?;
        let w: Vec<f64> = active.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mut x = vec![0.0; case.dim() - 1];
        for (p, wi) in active.iter().zip(&w) {
            for (xi, v) in x.iter_mut().zip(p.dtilde_all()) {
                *xi += wi / total * v;
            }
        }
        let minors = hessian_principal_minors(&DVector::new(d0, x)?, case)?;
        min_minor = minors.into_iter().fold(min_minor, f64::min);
    }
    let row_max = row_maxima(&recs);
    let reference = reference_vertex_maxima(case).to_vec();
    Ok(VertexCaseSummary {
        case,
        overall_max: row_max.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reference_overall_max: reference.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        records: recs.iter().map(VertexRecordView::from).collect(),
        row_maxima: row_max,
        reference_row_maxima: reference,
        constraints_hold,
        hessian_samples,
        min_leading_minor: min_minor,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexCheckData {
    pub cases: Vec<VertexCaseSummary>,
}

impl CsvTable for VertexCheckData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["case", "row", "d0_min", "d0_max", "coords", "r3_max", "d0_at_max"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.cases
            .iter()
            .flat_map(|c| {
                c.records.iter().map(move |r| {
                    let coords: Vec<String> = r.coords.iter().map(|(f, e)| format!("{f}={e}")).collect();
                    vec![
                        c.case.to_string(),
                        r.row.to_string(),
                        num(r.d0_range.0),
                        num(r.d0_range.1),
                        coords.join(";"),
                        num(r.r3_max),
                        num(r.d0_at_max),
                    ]
                })
            })
            .collect()
    }
}

pub fn vertex_check(cases: &[VertexCase], seed: u64) -> Result<VertexCheckData> {
    Ok(VertexCheckData {
        cases: cases.iter().map(|&c| vertex_summary(c, 200, seed)).collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RnMaximumCell {
    pub n: usize,
    pub k: usize,
    pub w_value: f64,
    pub reference_w_value: f64,
    pub best_value: f64,
    pub reference_best_value: f64,
    pub alpha: Vec<f64>,
    pub reference_alpha: Vec<f64>,
    pub max_alpha_diff: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaThrCell {
    pub n: usize,
    pub k: usize,
    pub lambda_thr: f64,
    pub reference: f64,
    pub record: ThresholdRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaDecCell {
    pub k: usize,
    pub q: usize,
    pub exact: String,
    pub value: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSeries {
    pub scan: GrowthScan,
    /// `(k, R_3(W_k))` from the closed form.
    pub w_closed_form: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TablesData {
    pub r3_bounds: Vec<R3BoundRow>,
    pub vertex_tables: Vec<VertexCaseSummary>,
    pub rn_maxima: Vec<RnMaximumCell>,
    /// Best-measured Werner-like state against `R_n(W_{k−1})`.
    pub lambda_thr: Vec<LambdaThrCell>,
    /// Same cells scored with the fixed `|W_k⟩` projection against the
    /// numerical maximum over `C_{k−1}`, kept for comparison.
    pub lambda_thr_fixed_w: Vec<LambdaThrCell>,
    pub lambda_dec: Vec<LambdaDecCell>,
    pub growth: GrowthSeries,
}

fn ratio_str(r: Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Inner search budget for each bisection step of the threshold tables.
fn inner_config(cfg: &OptimizationConfig) -> OptimizationConfig {
    cfg.with_restarts(cfg.restarts.min(4))
}

/// Recomputes every tabulated quantity next to its published value.
pub fn tables(cfg: &OptimizationConfig, k_max: usize) -> Result<(TablesData, Vec<String>)> {
    let mut warnings = Vec::new();
    let maxima: Vec<RnMaximum> = REFERENCE_RN
        .iter()
        .map(|&(n, k, _, _)| maximize_rn_over_ck(n, k, cfg))
        .collect::<Result<_>>()?;
    let best = |n: usize, k: usize| -> Option<&RnMaximum> { maxima.iter().find(|m| m.n == n && m.k == k) };

    let r3_bounds = REFERENCE_R3_BOUNDS
        .iter()
        .map(|&(k, reference_threshold, reference_best_known)| {
            let t = r3_threshold(k).expect("k <= 3");
            R3BoundRow {
                k,
                threshold_exact: ratio_str(t),
                threshold: *t.numer() as f64 / *t.denom() as f64,
                reference_threshold,
                best_known: if k == 1 { 1.0 } else { best(3, k).expect("tabulated").value },
                reference_best_known,
            }
        })
        .collect();

    let vertex_tables = VertexCase::ALL
        .iter()
        .map(|&c| vertex_summary(c, 200, cfg.seed))
        .collect::<Result<_>>()?;

    let mut rn_maxima = Vec::new();
    for (m, &(n, k, reference_best_value, reference_w_value)) in maxima.iter().zip(REFERENCE_RN) {
        if !m.converged {
            warnings.push(format!("R_{n} maximization over C_{k} did not converge"));
        }
        let reference_alpha = TABULATED_OPTIMA
            .iter()
            .find(|t| t.0 == n && t.1 == k)
            .map(|t| t.2.to_vec())
            .unwrap_or_default();
        rn_maxima.push(RnMaximumCell {
            n,
            k,
            w_value: w_state_rn(n, k)?,
            reference_w_value,
            best_value: m.value,
            reference_best_value,
            max_alpha_diff: m.alpha.iter().zip(&reference_alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            alpha: m.alpha.clone(),
            reference_alpha,
            converged: m.converged,
        });
    }

    let inner = inner_config(cfg);
    let lambda_thr: Vec<LambdaThrCell> = decoherence_threshold_table(&inner)?
        .into_iter()
        .map(|record| LambdaThrCell {
            n: record.n,
            k: record.k,
            lambda_thr: record.lambda_thr,
            reference: REFERENCE_LAMBDA_THR[record.n - 3][record.k - 3],
            record,
        })
        .collect();
    let mut lambda_thr_fixed_w = Vec::new();
    for n in 3..=5 {
        for k in 3..=10 {
            let threshold = maximize_rn_over_ck(n, k - 1, cfg)?.value;
            let record = lambda_threshold(n, k, threshold, Projection::FixedW, cfg)?;
            lambda_thr_fixed_w.push(LambdaThrCell {
                n,
                k,
                lambda_thr: record.lambda_thr,
                reference: REFERENCE_LAMBDA_THR[n - 3][k - 3],
                record,
            });
        }
    }
    for c in lambda_thr.iter().chain(&lambda_thr_fixed_w) {
        if !c.record.converged {
            warnings.push(format!("threshold search for n = {}, k = {} did not converge", c.n, c.k));
        }
    }
    let lambda_dec_row = (3..=10)
        .map(|k| {
            Ok(LambdaDecCell {
                k,
                q: k - 1,
                exact: format!("{}/{}", 1, k - 1),
                value: lambda_dec(k, k - 1)?,
                reference: REFERENCE_LAMBDA_DEC[k - 3],
            })
        })
        .collect::<Result<_>>()?;

    let scan = growth_scan(3, k_max, cfg)?;
    for p in scan.points.iter().filter(|p| !p.converged) {
        warnings.push(format!("growth scan point k = {} did not converge", p.k));
    }
    let w_closed_form = (1..=k_max)
        .map(|k| {
            let r = r3_w_exact(k)?;
            Ok((k, *r.numer() as f64 / *r.denom() as f64))
        })
        .collect::<Result<_>>()?;

    Ok((
        TablesData {
            r3_bounds,
            vertex_tables,
            rn_maxima,
            lambda_thr,
            lambda_thr_fixed_w,
            lambda_dec: lambda_dec_row,
            growth: GrowthSeries { scan, w_closed_form },
        },
        warnings,
    ))
}

impl CsvTable for TablesData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["table", "n", "k", "quantity", "computed", "reference", "abs_diff"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        let mut push = |table: &str, n: Option<usize>, k: Option<usize>, what: &str, c: f64, r: Option<f64>| {
            let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
            rows.push(vec![
                table.to_string(),
                opt(n),
                opt(k),
                what.to_string(),
                num(c),
                r.map_or(String::new(), num),
                r.map_or(String::new(), |r| num((c - r).abs())),
            ]);
        };
        for r in &self.r3_bounds {
            push("r3_bounds", Some(3), Some(r.k), "threshold", r.threshold, Some(r.reference_threshold));
            push("r3_bounds", Some(3), Some(r.k), "best_known", r.best_known, Some(r.reference_best_known));
        }
        for c in &self.vertex_tables {
            for (i, (m, r)) in c.row_maxima.iter().zip(&c.reference_row_maxima).enumerate() {
                push("vertex", Some(3), None, &format!("{}_row{}", c.case, i), *m, Some(*r));
            }
        }
        for c in &self.rn_maxima {
            push("rn_maxima", Some(c.n), Some(c.k), "w_value", c.w_value, Some(c.reference_w_value));
            push("rn_maxima", Some(c.n), Some(c.k), "best_value", c.best_value, Some(c.reference_best_value));
            for (p, (a, r)) in c.alpha.iter().zip(&c.reference_alpha).enumerate() {
                push("rn_maxima", Some(c.n), Some(c.k), &format!("alpha_{p}"), *a, Some(*r));
            }
        }
        for c in &self.lambda_thr {
            push("lambda_thr", Some(c.n), Some(c.k), "lambda_thr", c.lambda_thr, Some(c.reference));
        }
        for c in &self.lambda_thr_fixed_w {
            push("lambda_thr_fixed_w", Some(c.n), Some(c.k), "lambda_thr", c.lambda_thr, Some(c.reference));
        }
        for c in &self.lambda_dec {
            push("lambda_dec", None, Some(c.k), "lambda_dec", c.value, Some(c.reference));
        }
        for p in &self.growth.scan.points {
            push("growth", Some(3), Some(p.k), "best_value", p.value, None);
        }
        for &(k, v) in &self.growth.w_closed_form {
            push("growth", Some(3), Some(k), "w_closed_form", v, None);
        }
        rows
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeData {
    pub result: RnMaximum,
    pub w_value: f64,
    pub palindrome_defect: f64,
    /// Proven `R_3` bound for `C_k`, when one exists.
    pub proven_bound: Option<f64>,
}

pub fn optimize(n: usize, k: usize, cfg: &OptimizationConfig) -> Result<(OptimizeData, Vec<String>)> {
    let result = maximize_rn_over_ck(n, k, cfg)?;
    let warnings = if result.converged { vec![] } else { vec!["best restart did not converge".to_string()] };
    let proven_bound = if n == 3 {
        r3_threshold(k).map(|r| *r.numer() as f64 / *r.denom() as f64)
    } else {
        None
    };
    Ok((
        OptimizeData {
            w_value: w_state_rn(n, k)?,
            palindrome_defect: result.palindrome_defect(),
            proven_bound,
            result,
        },
        warnings,
    ))
}

impl CsvTable for OptimizeData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["level", "alpha"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.result.alpha.iter().enumerate().map(|(p, a)| vec![p.to_string(), num(*a)]).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WernerPoint {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WernerSweepData {
    pub series: Vec<WernerPoint>,
    pub threshold_record: ThresholdRecord,
    pub lambda_dec: f64,
}

/// `R_n` of the Werner-like state on a uniform `λ` grid plus its threshold.
/// `threshold` defaults to `R_n(W_{k−1})`.
pub fn werner_sweep(
    n: usize,
    k: usize,
    points: usize,
    projection: Projection,
    threshold: Option<f64>,
    cfg: &OptimizationConfig,
) -> Result<(WernerSweepData, Vec<String>)> {
    if points < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least 2 points".into()));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    let mut warnings = Vec::new();
    let series = (0..points)
        .map(|i| {
            let lambda = i as f64 / (points - 1) as f64;
            let s = werner_rn(n, k, lambda, projection, cfg)?;
            if !s.converged {
                warnings.push(format!("projection search at lambda = {lambda} did not converge"));
            }
            Ok(WernerPoint { lambda, value: s.value })
        })
        .collect::<Result<_>>()?;
    let threshold = match threshold {
        Some(t) => t,
        None => w_state_rn(n, k - 1)?,
    };
    let threshold_record = lambda_threshold(n, k, threshold, projection, cfg)?;
    if !threshold_record.reachable {
        warnings.push("threshold exceeds the pure-state value".into());
    }
    Ok((WernerSweepData { series, threshold_record, lambda_dec: lambda_dec(k, k - 1)? }, warnings))
}

impl CsvTable for WernerSweepData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["lambda", "r_n"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.series.iter().map(|p| vec![num(p.lambda), num(p.value)]).collect()
    }
}

/// Full sweep; JSON carries the summary and records, CSV the records only.
#[derive(Debug, Clone, Serialize)]
pub struct GueSweepData {
    #[serde(flatten)]
    pub sweep: ToleranceSweep,
}

pub fn gue_sweep(k: usize, samples: usize, cfg: &OptimizationConfig) -> Result<(GueSweepData, Vec<String>)> {
    let sweep = tolerance_sweep(k, samples, &SweepConfig::default(), cfg)?;
    let mut warnings = Vec::new();
    let missing = sweep.summary.crossings.iter().filter(|c| c.is_none()).count();
    if missing > 0 {
        warnings.push(format!("{missing} samples never crossed the threshold on the tau grid"));
    }
    Ok((GueSweepData { sweep }, warnings))
}

impl CsvTable for GueSweepData {
    fn csv_header(&self) -> Vec<String> {
        hdr(&["seed", "tau", "D", "r3"])
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.sweep
            .records
            .iter()
            .map(|r| vec![r.seed.to_string(), num(r.tau), num(r.deviation), num(r.r3)])
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxData {
    pub target: String,
    pub measurement: String,
    pub fit: MixtureApprox,
    pub weights: Vec<f64>,
    pub verdict: Verdict,
    /// Points per period in the CSV series.
    pub samples: usize,
}

/// Best `q`-approximation of the pattern of `target` under its measurement.
pub fn approx(
    target: &StateSpec,
    q: usize,
    n_components: usize,
    cfg: &OptimizationConfig,
) -> Result<(ApproxData, Vec<String>)> {
    let st = target.resolve(cfg)?;
    let mut warnings: Vec<String> = st.warning.clone().into_iter().collect();
    let pattern = st.pattern()?;
    let chi = st.measurement.projector();
    let fit = best_q_approximation(&pattern, &chi, q, n_components, cfg)?;
    let verdict = reproducibility_verdict(&pattern, &chi, q, cfg)?;
    if !fit.converged || !verdict.fit.converged {
        warnings.push("mixture search hit its iteration cap".into());
    }
    Ok((
        ApproxData {
            target: target.to_string(),
            measurement: st.measurement_label,
            weights: fit.components.iter().map(|c| c.weight).collect(),
            fit,
            verdict,
            samples: 200,
        },
        warnings,
    ))
}

impl CsvTable for ApproxData {
    fn csv_header(&self) -> Vec<String> {
        let mut h = hdr(&["t", "target", "fit"]);
        h.extend((1..=self.fit.components.len()).map(|m| format!("component_{m}")));
        h
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.samples)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / self.samples as f64;
                let mut row = vec![num(t), num(self.fit.target_pattern.evaluate(t)), num(self.fit.fitted_pattern.evaluate(t))];
                row.extend(self.fit.components.iter().map(|c| num(c.pattern.evaluate(t))));
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn state_specs_round_trip() {
        for s in ["W:3", "PSI:4", "werner:3:0.18", "vec:1,0.5,-0.25"] {
            let spec: StateSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for bad in ["W", "W:0", "W:x", "werner:3", "werner:3:1.5", "vec:", "vec:0,0", "foo:3"] {
            assert!(matches!(bad.parse::<StateSpec>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn csv_samples() {
        let data = "t,p\n0,1\n1.5707963267948966,0.5\n";
        assert_eq!(read_samples_csv(data.as_bytes()).unwrap().len(), 2);
        assert!(read_samples_csv("x,y\n0,1\n".as_bytes()).is_err());
        assert!(read_samples_csv("t,p\n0,abc\n".as_bytes()).is_err());
        assert!(read_samples_csv("t,p\n".as_bytes()).is_err());
    }

    #[test]
    fn certify_states() {
        let cfg = OptimizationConfig::default();
        let (d, _) = certify(&PatternSource::State("W:3".parse().unwrap()), &cfg).unwrap();
        assert_abs_diff_eq!(d.certificate.value, 940.0 / 540.0, epsilon = 1e-12);
        assert_eq!(d.certificate.certified_level, 3);
        assert_eq!(d.report.moments.len(), 5);

        let samples: Vec<(f64, f64)> =
            (0..16).map(|i| (i as f64 * std::f64::consts::TAU / 16.0, 0.5)).collect();
        let src = PatternSource::Samples { label: "flat".into(), samples, dim: 2 };
        let (d, _) = certify(&src, &cfg).unwrap();
        assert_abs_diff_eq!(d.certificate.value, 0.5, epsilon = 1e-12);
        assert_eq!(d.certificate.certified_level, 1);
    }

    #[test]
    fn documents_carry_header() {
        let cfg = OptimizationConfig::default();
        let (data, w) = optimize(3, 2, &cfg).unwrap();
        let doc = Document::new("optimize", 7, serde_json::json!({"n": 3, "k": 2}), w, data);
        let json = doc.to_json().unwrap();
        assert!(json.contains("\"schema_version\": \"1\""));
        assert!(json.contains("\"seed\": 7"));
        let csv = doc.to_csv().unwrap();
        assert!(csv.starts_with("# schema_version=1\n"));
        assert!(csv.contains("level,alpha\n0,"));
    }

    #[test]
    fn vertex_summaries() {
        let s = vertex_summary(VertexCase::K4D4, 50, 1).unwrap();
        assert!(s.constraints_hold);
        assert!(s.min_leading_minor > 0.0);
        assert_abs_diff_eq!(s.overall_max, 2.4375, epsilon = 1e-9);
    }
}
