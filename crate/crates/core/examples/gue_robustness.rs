//! How far the measurement can drift before the optimal state loses its
//! certificate.

use coherence_cert::optim::OptimizationConfig;
use coherence_cert::robustness::{tolerance_sweep, SweepConfig};

fn main() -> coherence_cert::Result<()> {
    let cfg = OptimizationConfig::default().with_seed(2024);
    let sweep = tolerance_sweep(4, 100, &SweepConfig::default(), &cfg)?;
    let s = &sweep.summary;
    println!("k = {}, threshold {:.4}, R_3 at zero drift {:.4}", s.k, s.threshold, s.r3_at_zero);
    for b in &s.bins {
        if let (Some(mean), Some(std)) = (b.mean, b.std) {
            println!("D in [{:.2}, {:.2}): n = {:4}  R_3 = {mean:.4} ± {std:.4}", b.lo, b.hi, b.count);
        }
    }
    println!("median crossing D = {:?}", s.median_crossing);
    println!("monotonicity violations: {}", s.monotonicity_violations());
    Ok(())
}
