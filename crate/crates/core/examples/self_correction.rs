//! Distortions from two hops cancelling without any correction.

use klm_teleport::chain::{chain_state, ChainSpec};
use klm_teleport::resource::tent;
use klm_teleport::teleport::QubitState;

fn main() -> klm_teleport::Result<()> {
    let spec = ChainSpec::uniform(tent(0.0366)?, 2)?;
    let input = QubitState::diagonal();
    for outcomes in [[1, 6], [2, 5], [3, 4], [1, 1], [3, 3]] {
        let s = chain_state(&input, &spec, &outcomes)?;
        println!(
            "outcomes {outcomes:?}: probability {:.5}, fidelity {:.6}, self-corrected {}",
            s.probability,
            s.state.fidelity(&input),
            s.is_self_corrected()
        );
    }
    Ok(())
}
