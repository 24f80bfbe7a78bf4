use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use coherence_cert::approx::pattern_distance;
use coherence_cert::bounds::{certify_r3, d_from_alpha, r3_from_d};
use coherence_cert::optim::OptimizationConfig;
use coherence_cert::pattern::{
    fit_pattern_from_samples, moment_by_sampling, moments, pattern_from_overlaps, pattern_from_pure,
    pattern_from_states, ratio, OverlapVector, PatternCoefficients,
};
use coherence_cert::quantum::{psi_star, DensityMatrix, PureState};
use coherence_cert::robustness::{drifted_projection, sample_gue};
use coherence_cert::thresholds::maximize_rn_over_ck;

fn pure(dim: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| PureState::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn mixed(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec((0.01f64..1.0, pure(dim)), 1..=dim).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let weighted: Vec<(f64, &PureState)> = parts.iter().map(|(w, s)| (w / total, s)).collect();
        DensityMatrix::mixture(&weighted).unwrap()
    })
}

/// Three states of a shared dimension.
fn triple() -> impl Strategy<Value = (DensityMatrix, DensityMatrix, DensityMatrix)> {
    (2usize..=4).prop_flat_map(|d| (mixed(d), mixed(d), mixed(d)))
}

fn pattern() -> impl Strategy<Value = PatternCoefficients> {
    (1usize..=6).prop_flat_map(|d| (mixed(d), mixed(d))).prop_map(|(r, s)| pattern_from_states(&r, &s).unwrap())
}

fn overlaps() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|d| {
        (prop::collection::vec(0.0f64..1.0, d), prop::collection::vec(0.0f64..TAU, d)).prop_map(|(a, p)| {
            let total: f64 = a.iter().sum::<f64>().max(1e-12);
            (a.into_iter().map(|x| x / total).collect(), p)
        })
    })
}

fn c3_max() -> f64 {
    static CAP: OnceLock<f64> = OnceLock::new();
    *CAP.get_or_init(|| maximize_rn_over_ck(3, 3, &OptimizationConfig::default()).unwrap().value)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ratio_convex_in_state((a, b, s) in triple(), lambda in 0.0f64..1.0, n in 2usize..=5) {
        let mix = DensityMatrix::convex_combination(lambda, &a, &b).unwrap();
        let r = |x: &DensityMatrix| ratio(&pattern_from_states(x, &s).unwrap(), n).unwrap();
        prop_assert!(r(&mix) <= lambda * r(&a) + (1.0 - lambda) * r(&b) + 1e-9);
    }

    #[test]
    fn ratio_convex_in_measurement((a, b, rho) in triple(), lambda in 0.0f64..1.0, n in 2usize..=5) {
        let mix = DensityMatrix::convex_combination(lambda, &a, &b).unwrap();
        let r = |x: &DensityMatrix| ratio(&pattern_from_states(&rho, x).unwrap(), n).unwrap();
        prop_assert!(r(&mix) <= lambda * r(&a) + (1.0 - lambda) * r(&b) + 1e-9);
    }

    #[test]
    fn moment_oracles_agree(pat in pattern(), n in 1usize..=5) {
        let conv = moments(&pat, n).unwrap().get(n).unwrap();
        let sampled = moment_by_sampling(&pat, n, n * pat.dim() * 2 + 1).unwrap();
        let dense = (0..10_000).map(|j| pat.evaluate(TAU * j as f64 / 1e4).powi(n as i32)).sum::<f64>() / 1e4;
        prop_assert!((conv - sampled).abs() <= 1e-8);
        prop_assert!((conv - dense).abs() <= 1e-8);
    }

    #[test]
    fn zero_phases_maximize_ratios((alpha, phi) in overlaps(), n in 2usize..=5) {
        let phased = ratio(&pattern_from_overlaps(&OverlapVector::new(alpha.clone(), phi).unwrap()), n).unwrap();
        let flat = ratio(&pattern_from_overlaps(&OverlapVector::real(alpha).unwrap()), n).unwrap();
        prop_assert!(phased <= flat + 1e-12);
    }

    #[test]
    fn moments_survive_dilation(pat in pattern(), s in 1usize..=3, n in 1usize..=4) {
        let a = moments(&pat, n).unwrap().get(n).unwrap();
        let b = moments(&pat.dilated(s).unwrap(), n).unwrap().get(n).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn patterns_are_probabilities(pat in pattern()) {
        let (lo, hi) = pat.extremes(512);
        prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
    }

    #[test]
    fn fit_recovers_exact_samples(pat in pattern()) {
        let fit = fit_pattern_from_samples(&pat.sample(4 * pat.dim() + 1), pat.dim()).unwrap();
        prop_assert!(pattern_distance(&fit.pattern, &pat).unwrap() <= 1e-20);
    }

    #[test]
    fn distance_is_a_squared_metric(a in pattern(), b in pattern(), c in pattern()) {
        let d = a.dim().max(b.dim()).max(c.dim());
        let (a, b, c) = (a.embed(d).unwrap(), b.embed(d).unwrap(), c.embed(d).unwrap());
        let dist = |x: &PatternCoefficients, y: &PatternCoefficients| pattern_distance(x, y).unwrap().sqrt();
        prop_assert_eq!(dist(&a, &a), 0.0);
        prop_assert!((dist(&a, &b) - dist(&b, &a)).abs() <= 1e-15);
        prop_assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c) + 1e-12);
    }

    #[test]
    fn d_parametrization_matches_engine(alpha in prop::collection::vec(0.01f64..1.0, 1..=6)) {
        let psi = PureState::from_populations(&alpha.iter().map(|a| a / alpha.iter().sum::<f64>()).collect::<Vec<_>>()).unwrap();
        let engine = ratio(&pattern_from_pure(&psi, &psi).unwrap(), 3).unwrap();
        let overlaps: Vec<f64> = psi.populations();
        let via_d = r3_from_d(&d_from_alpha(&overlaps).unwrap());
        prop_assert!((engine - via_d).abs() <= 1e-10);
    }

    #[test]
    fn certified_level_is_monotone(a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(certify_r3(lo).unwrap().certified_level <= certify_r3(hi).unwrap().certified_level);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_never_fakes_coherence(seed in any::<u64>(), tau in 0.0f64..2.0) {
        let psi = psi_star(3).unwrap();
        let chi = drifted_projection(&psi, &sample_gue(3, seed).unwrap(), tau).unwrap();
        let r3 = ratio(&pattern_from_pure(&psi, &chi).unwrap(), 3).unwrap();
        prop_assert!(r3 <= c3_max() + 1e-9);
    }
}
