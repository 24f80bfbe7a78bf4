//! Mixing thresholds below which Werner-like states still certify k levels.

use coherence_cert::bounds::lambda_dec;
use coherence_cert::optim::OptimizationConfig;
use coherence_cert::thresholds::{lambda_threshold, w_state_rn, Projection};

fn main() -> coherence_cert::Result<()> {
    let cfg = OptimizationConfig::default().with_restarts(4);
    println!("  k   n=3     n=4     n=5     dec");
    for k in 3..=10 {
        let mut line = format!("{k:3}");
        for n in 3..=5 {
            let rec = lambda_threshold(n, k, w_state_rn(n, k - 1)?, Projection::Optimized, &cfg)?;
            line.push_str(&format!("  {:.4}", rec.lambda_thr));
        }
        line.push_str(&format!("  {:.4}", lambda_dec(k, k - 1)?));
        println!("{line}");
    }
    Ok(())
}
