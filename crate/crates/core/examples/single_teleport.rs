//! One teleportation hop: outcome statistics, distorted states and the Kraus
//! correction.

use klm_teleport::resource::tent;
use klm_teleport::teleport::{
    kraus_correct, outcome_distribution, single_success_prob, QubitState,
};
use num_complex::Complex64;

fn main() -> klm_teleport::Result<()> {
    let coeffs = tent(0.0366)?;
    let input = QubitState::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8))?;
    for rec in outcome_distribution(&input, &coeffs) {
        match rec.post_state {
            Some(post) if !rec.destroyed => {
                let fix = kraus_correct(&post, &coeffs, rec.m)?;
                let restored = fix
                    .corrected_state
                    .map(|q| q.fidelity(&input))
                    .unwrap_or(0.0);
                println!(
                    "m={} p={:.5} fidelity before {:.5}, correction succeeds w.p. {:.5} (fidelity {restored:.3})",
                    rec.m,
                    rec.probability,
                    post.fidelity(&input),
                    fix.success_prob
                );
            }
            _ => println!("m={} p={:.5} qubit lost", rec.m, rec.probability),
        }
    }
    println!(
        "overall success probability {:.6}",
        single_success_prob(&coeffs)
    );
    Ok(())
}
