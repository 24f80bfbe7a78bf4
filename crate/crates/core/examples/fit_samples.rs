//! Recover pattern coefficients from noisy samples and compare moment
//! estimates from the fit with direct quadrature.

use coherence_cert::pattern::{fit_pattern_from_samples, moment_by_sampling, moments, pattern_from_pure};
use coherence_cert::quantum::psi_star;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> coherence_cert::Result<()> {
    let psi = psi_star(3)?;
    let truth = pattern_from_pure(&psi, &psi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noisy: Vec<(f64, f64)> = truth
        .sample(64)
        .into_iter()
        .map(|(t, p)| (t, p + rng.random_range(-1e-3..1e-3)))
        .collect();
    let fit = fit_pattern_from_samples(&noisy, 3)?;
    println!("residual rms {:.2e}, condition number {:.2}", fit.residual_rms, fit.condition_number);
    let exact = moments(&truth, 5)?;
    let fitted = moments(&fit.pattern, 5)?;
    for n in 1..=5 {
        println!(
            "M_{n}: exact {:.6}  fitted {:.6}  quadrature {:.6}",
            exact.get(n).unwrap(),
            fitted.get(n).unwrap(),
            moment_by_sampling(&truth, n, 4096)?
        );
    }
    for n in 2..=5 {
        println!("R_{n}: exact {:.4}  fitted {:.4}", exact.ratio(n)?, fitted.ratio(n)?);
    }
    Ok(())
}
