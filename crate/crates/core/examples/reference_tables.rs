//! Regenerate every reference table and report the largest deviation.

use coherence_cert::optim::OptimizationConfig;
use coherence_cert::report::tables;

fn main() -> coherence_cert::Result<()> {
    let (t, warnings) = tables(&OptimizationConfig::default(), 10)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let worst = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    println!(
        "R_n maxima: worst value diff {:.4}, worst alpha diff {:.4}",
        worst(&mut t.rn_maxima.iter().map(|c| (c.best_value - c.reference_best_value).abs())),
        worst(&mut t.rn_maxima.iter().map(|c| c.max_alpha_diff)),
    );
    println!(
        "lambda_thr: worst diff {:.4}",
        worst(&mut t.lambda_thr.iter().map(|c| (c.lambda_thr - c.reference).abs()))
    );
    for c in &t.vertex_tables {
        println!("{}: computed {:.4?} published {:?}", c.case, c.row_maxima, c.reference_row_maxima);
    }
    println!("growth slope {:.3}", t.growth.scan.slope);
    Ok(())
}
