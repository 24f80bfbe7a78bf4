//! Maximize `R_3` over k-level states and fit the log-log growth rate.

use coherence_cert::bounds::r3_w_closed_form;
use coherence_cert::optim::OptimizationConfig;
use coherence_cert::thresholds::{growth_scan, maximize_rn_over_ck};

fn main() -> coherence_cert::Result<()> {
    let cfg = OptimizationConfig::default().with_seed(11);
    let best = maximize_rn_over_ck(3, 4, &cfg)?;
    println!("R_3 over C_4: {:.4} with alpha {:.4?}", best.value, best.alpha);
    println!("palindrome defect {:.1e}", best.palindrome_defect());

    let scan = growth_scan(3, 12, &cfg.with_restarts(8))?;
    for p in &scan.points {
        println!("k = {:2}: best {:.4}  W_k {:.4}", p.k, p.value, r3_w_closed_form(p.k)?);
    }
    println!("slope {:.3}, intercept {:.3}", scan.slope, scan.intercept);
    Ok(())
}
