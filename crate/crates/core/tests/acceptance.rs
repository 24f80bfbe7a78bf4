//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coherence_cert::approx::{best_q_approximation, default_approx_config};
use coherence_cert::bounds::{lambda_dec, r3_threshold, r3_w_closed_form, row_maxima, vertex_table, VertexCase};
use coherence_cert::optim::OptimizationConfig;
use coherence_cert::pattern::{
    moment_by_sampling, moments, pattern_from_overlaps, pattern_from_pure, pattern_from_states, ratio,
    OverlapVector, PatternCoefficients,
};
use coherence_cert::quantum::{w_state, werner_state, DensityMatrix, HarmonicBasis, PureState, WernerParams, TABULATED_OPTIMA};
use coherence_cert::report::{reference_vertex_maxima, REFERENCE_LAMBDA_THR, REFERENCE_RN};
use coherence_cert::robustness::{tolerance_sweep, SweepConfig};
use coherence_cert::thresholds::{decoherence_threshold_table, maximize_rn_over_ck, werner_rn, Projection};

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { failures: vec![], notes: vec![] }
    }
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn budget(out: &mut Outcome, elapsed: Duration, limit: Duration) {
    out.note(format!("runtime {:.2?} (limit {:.0?})", elapsed, limit));
    out.check(elapsed < limit, format!("runtime {elapsed:.2?} exceeds {limit:.0?}"));
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for k in 1..=30 {
        let w = w_state(k).unwrap();
        let engine = ratio(&pattern_from_pure(&w, &w).unwrap(), 3).unwrap();
        let closed = r3_w_closed_form(k).unwrap();
        out.check((engine - closed).abs() <= 1e-12, format!("k = {k}: engine {engine} vs closed form {closed}"));
    }
    for (k, want) in [(2, 1.25), (3, 940.0 / 540.0), (4, 2.265625)] {
        let got = r3_w_closed_form(k).unwrap();
        out.check((got - want).abs() <= 1e-12, format!("spot k = {k}: {got} vs {want}"));
    }
    budget(&mut out, start.elapsed(), Duration::from_secs(1));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let cfg = OptimizationConfig::default();
    for &(n, k, best, _) in REFERENCE_RN {
        let m = maximize_rn_over_ck(n, k, &cfg).unwrap();
        out.check((m.value - best).abs() <= 0.01, format!("R_{n} over C_{k}: {:.4} vs {best}", m.value));
        let pops = TABULATED_OPTIMA.iter().find(|t| t.0 == n && t.1 == k).unwrap().2;
        for (p, (a, b)) in m.alpha.iter().zip(pops).enumerate() {
            out.check((a - b).abs() <= 0.01, format!("R_{n} over C_{k}: alpha_{p} {a:.4} vs {b}"));
        }
    }
    budget(&mut out, start.elapsed(), Duration::from_secs(120));
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for case in [VertexCase::K3D3, VertexCase::K3GeneralGeneric, VertexCase::K3GeneralRatio12] {
        let got = row_maxima(&vertex_table(case));
        let want = reference_vertex_maxima(case);
        out.check(got.len() == want.len(), format!("{case}: {} rows vs {}", got.len(), want.len()));
        for (i, (g, w)) in got.iter().zip(want).enumerate() {
            out.check((g - w).abs() <= 0.01, format!("{case} row {i}: {g:.4} vs {w}"));
        }
    }
    let k4 = row_maxima(&vertex_table(VertexCase::K4D4)).into_iter().fold(f64::NEG_INFINITY, f64::max);
    out.check((k4 - 2.44).abs() <= 0.01, format!("k4d4 overall {k4:.4} vs 2.44"));
    for (k, num, den) in [(1, 1, 1), (2, 5, 4), (3, 179, 96)] {
        let t = r3_threshold(k).unwrap();
        out.check(*t.numer() == num && *t.denom() == den, format!("threshold for k = {k}: {t}"));
    }
    budget(&mut out, start.elapsed(), Duration::from_secs(10));
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let cfg = OptimizationConfig::default().with_restarts(4);
    let table = decoherence_threshold_table(&cfg).unwrap();
    out.check(table.len() == 24, format!("{} cells", table.len()));
    for rec in &table {
        let want = REFERENCE_LAMBDA_THR[rec.n - 3][rec.k - 3];
        out.check(
            (rec.lambda_thr - want).abs() <= 0.01,
            format!("n = {}, k = {}: {:.4} vs {want}", rec.n, rec.k, rec.lambda_thr),
        );
    }
    for k in 3..=10usize {
        let q = k - 1;
        let got = lambda_dec(k, q).unwrap();
        let exact = (k - q) as f64 / (k - 1) as f64;
        out.check(got == exact, format!("lambda_dec k = {k}: {got} vs {exact}"));
    }
    budget(&mut out, start.elapsed(), Duration::from_secs(60));
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let cfg = default_approx_config();
    let chi = w_state(3).unwrap().projector();
    let residual = |lambda: f64| {
        let rho = werner_state(WernerParams::new(3, lambda).unwrap(), HarmonicBasis::new(3).unwrap()).unwrap();
        let target = pattern_from_states(&rho, &chi).unwrap();
        best_q_approximation(&target, &chi, 2, 3, &cfg).unwrap().residual
    };
    let r = residual(0.54);
    out.note(format!("residual at 0.54: {r:.2e}"));
    out.check(r < 1e-8, format!("residual at 0.54: {r:.3e}"));
    for lambda in [0.18, 0.36] {
        let r = residual(lambda);
        out.note(format!("residual at {lambda}: {r:.3e}"));
        out.check(r > 1e-6, format!("residual at {lambda}: {r:.3e}"));
    }
    let r3 = werner_rn(3, 3, 0.18, Projection::Optimized, &OptimizationConfig::default()).unwrap().value;
    out.note(format!("R_3 of werner(3, 0.18) under the best projection: {r3:.4}"));
    out.check((r3 - 1.26).abs() <= 0.01, format!("R_3 of werner(3, 0.18): {r3:.4} vs 1.26"));
    budget(&mut out, start.elapsed(), Duration::from_secs(60));
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let cfg = OptimizationConfig::default();
    let sweep = tolerance_sweep(4, 100, &SweepConfig::default(), &cfg).unwrap();
    let s = &sweep.summary;
    let v = s.monotonicity_violations();
    out.note(format!("bin violations {v}, R_3(0) {:.4}, median crossing {:?}", s.r3_at_zero, s.median_crossing));
    out.check(v <= 1, format!("{v} monotonicity violations"));
    out.check((s.r3_at_zero - 2.32).abs() <= 0.01, format!("R_3 at D = 0: {:.4}", s.r3_at_zero));
    match s.median_crossing {
        Some(d) => out.check((0.1..=0.6).contains(&d), format!("median crossing {d:.4}")),
        None => out.check(false, "no median crossing"),
    }
    budget(&mut out, start.elapsed(), Duration::from_secs(120));
    out
}

fn random_mixed(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix {
    let rank = rng.random_range(1..=d);
    let states: Vec<PureState> = (0..rank).map(|_| random_pure(rng, d)).collect();
    let mut w: Vec<f64> = (0..rank).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let parts: Vec<(f64, &PureState)> = w.iter().copied().zip(states.iter()).collect();
    DensityMatrix::mixture(&parts).unwrap()
}

fn random_pure(rng: &mut ChaCha8Rng, d: usize) -> PureState {
    let amps = (0..d).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    PureState::normalized(amps).unwrap()
}

fn dense_moment(pat: &PatternCoefficients, n: usize, points: usize) -> f64 {
    (0..points)
        .map(|j| pat.evaluate(std::f64::consts::TAU * j as f64 / points as f64).powi(n as i32))
        .sum::<f64>()
        / points as f64
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = [0.0f64; 4];

    for arg in 0..2 {
        for _ in 0..1000 {
            let d = rng.random_range(2..=4);
            let n = rng.random_range(2..=5);
            let (a, b, fixed) = (random_mixed(&mut rng, d), random_mixed(&mut rng, d), random_mixed(&mut rng, d));
            let lambda = rng.random_range(0.0..1.0);
            let mix = DensityMatrix::convex_combination(lambda, &a, &b).unwrap();
            let r = |x: &DensityMatrix| {
                let pat = if arg == 0 { pattern_from_states(x, &fixed) } else { pattern_from_states(&fixed, x) };
                ratio(&pat.unwrap(), n).unwrap()
            };
            let excess = r(&mix) - (lambda * r(&a) + (1.0 - lambda) * r(&b));
            worst[arg] = worst[arg].max(excess);
        }
    }
    out.check(worst[0] <= 1e-9, format!("first-argument convexity violated by {:.3e}", worst[0]));
    out.check(worst[1] <= 1e-9, format!("second-argument convexity violated by {:.3e}", worst[1]));

    for _ in 0..1000 {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=5);
        let pat = pattern_from_states(&random_mixed(&mut rng, d), &random_mixed(&mut rng, d)).unwrap();
        let conv = moments(&pat, n).unwrap().get(n).unwrap();
        let sampled = moment_by_sampling(&pat, n, 2 * n * d + 1).unwrap();
        let dense = dense_moment(&pat, n, 10_000);
        worst[2] = worst[2].max((conv - sampled).abs()).max((conv - dense).abs());
    }
    out.check(worst[2] <= 1e-8, format!("moment oracles disagree by {:.3e}", worst[2]));

    for _ in 0..1000 {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(2..=5);
        let mut alpha: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
        let phi: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let with_phase = ratio(&pattern_from_overlaps(&OverlapVector::new(alpha.clone(), phi).unwrap()), n).unwrap();
        let flat = ratio(&pattern_from_overlaps(&OverlapVector::real(alpha).unwrap()), n).unwrap();
        worst[3] = worst[3].max(with_phase - flat);
    }
    out.check(worst[3] <= 1e-12, format!("phases raised R_n by {:.3e}", worst[3]));

    let cfg = OptimizationConfig::default();
    for k in [3, 4] {
        let cap = maximize_rn_over_ck(3, k, &cfg).unwrap().value;
        let sweep = tolerance_sweep(k, 100, &SweepConfig::default(), &cfg).unwrap();
        out.check(
            sweep.summary.max_r3 <= cap + 1e-9,
            format!("k = {k}: drifted R_3 {:.6} above C_{k} maximum {cap:.6}", sweep.summary.max_r3),
        );
    }
    out.note(format!(
        "worst convexity excess {:.1e} / {:.1e}, oracle gap {:.1e}, phase gain {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ));
    budget(&mut out, start.elapsed(), Duration::from_secs(180));
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let runs: &[&[&str]] = &[
        &["certify", "PSI:3"],
        &["moments", "werner:4:0.2"],
        &["optimize", "--n", "4", "--k", "3", "--seed", "17"],
        &["vertex-check", "--seed", "3"],
        &["werner-sweep", "--k", "4", "--n", "3", "--points", "21", "--seed", "5"],
        &["gue-sweep", "--k", "4", "--samples", "40", "--seed", "9"],
        &["gue-sweep", "--k", "3", "--samples", "20", "--seed", "9", "--format", "csv"],
        &["approx", "werner:3:0.3", "--q", "2", "--seed", "2", "--restarts", "4"],
        &["tables", "--k-max", "5", "--restarts", "4", "--format", "csv"],
    ];
    for args in runs {
        let run = || Command::new(env!("CARGO_BIN_EXE_cohcert")).args(*args).output().unwrap();
        let (a, b) = (run(), run());
        let line = args.join(" ");
        out.check(a.status.code() == Some(0), format!("`{line}` exited with {:?}", a.status.code()));
        out.check(a.stdout == b.stdout && !a.stdout.is_empty(), format!("`{line}` output differs between runs"));
    }
    out.note(format!("{} commands compared", runs.len()));
    budget(&mut out, start.elapsed(), Duration::from_secs(300));
    out
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("closed form for uniform superpositions", criterion_1),
        ("R_n maxima and optimal populations", criterion_2),
        ("vertex tables and proven thresholds", criterion_3),
        ("Werner decoherence thresholds", criterion_4),
        ("q-approximation regimes", criterion_5),
        ("drift tolerance envelope", criterion_6),
        ("property suites", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let verdict = if out.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict} ({name})", i + 1);
        for n in &out.notes {
            println!("    {n}");
        }
        for f in &out.failures {
            println!("    failed: {f}");
        }
        failed += usize::from(!out.failures.is_empty());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
