//! Certify the coherence level of a few pure states from their `R_3` ratio.

use coherence_cert::bounds::certify_r3;
use coherence_cert::pattern::{pattern_from_pure, ratio};
use coherence_cert::quantum::{psi_star, w_state, PureState};

fn main() -> coherence_cert::Result<()> {
    let states = [
        ("basis |0>", PureState::basis(2, 0)?),
        ("W_2", w_state(2)?),
        ("W_3", w_state(3)?),
        ("Psi*_3", psi_star(3)?),
        ("Psi*_4", psi_star(4)?),
    ];
    for (name, psi) in &states {
        let pat = pattern_from_pure(psi, psi)?;
        let cert = certify_r3(ratio(&pat, 3)?)?;
        println!("{name:>10}: R_3 = {:.4}  certified level {}", cert.value, cert.certified_level);
    }
    Ok(())
}
