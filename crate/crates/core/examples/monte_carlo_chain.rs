//! Sampling chain trajectories and comparing with the exact lattice sum.

use klm_teleport::chain::{deferred_success_prob, sample_chain, ChainSpec};
use klm_teleport::resource::tent;
use klm_teleport::teleport::{InputQubit, QubitState};

fn main() -> klm_teleport::Result<()> {
    let spec = ChainSpec::uniform(tent(0.0366)?, 6)?;
    println!("exact: {:.6}", deferred_success_prob(&spec)?);
    for (label, input) in [
        ("Haar", InputQubit::HaarAverage),
        ("|H>", InputQubit::State(QubitState::h())),
    ] {
        let mc = sample_chain(&input, &spec, 200_000, 11);
        println!(
            "{label}: {:.6} ± {:.6} ({} of {} trajectories destroyed)",
            mc.estimate, mc.std_error, mc.destroyed, mc.trials
        );
    }
    Ok(())
}
