//! Can a Werner-like pattern be reproduced by mixtures of 2-level coherent
//! states? The residual vanishes once the mixing exceeds one half.

use coherence_cert::approx::{default_approx_config, reproducibility_verdict};
use coherence_cert::pattern::pattern_from_states;
use coherence_cert::quantum::{w_state, werner_state, HarmonicBasis, WernerParams};

fn main() -> coherence_cert::Result<()> {
    let cfg = default_approx_config();
    let chi = w_state(3)?.projector();
    for lambda in [0.0, 0.2, 0.4, 0.49, 0.51, 0.6, 0.8] {
        let rho = werner_state(WernerParams::new(3, lambda)?, HarmonicBasis::new(3)?)?;
        let target = pattern_from_states(&rho, &chi)?;
        let v = reproducibility_verdict(&target, &chi, 2, &cfg)?;
        let oracle = if lambda < 0.5 { (0.5 - lambda).powi(2) / 9.0 } else { 0.0 };
        println!(
            "lambda {lambda:.2}: residual {:.3e} (analytic {:.3e})  not reproducible: {}",
            v.residual, oracle, v.not_reproducible
        );
    }
    Ok(())
}
