//! Deferred versus per-hop correction along a six-hop chain.

use klm_teleport::chain::{chain_report, ChainSpec, DEFAULT_LATTICE_BUDGET};
use klm_teleport::resource::{maximally_entangled, tent};

fn main() -> klm_teleport::Result<()> {
    println!(
        "{:<22} {:>10} {:>10} {:>10}",
        "resource", "deferred", "per-hop", "gain"
    );
    for (label, coeffs) in [
        ("uniform N=6", maximally_entangled(6)?),
        ("tent x=0.0366", tent(0.0366)?),
        ("tent x=0.08", tent(0.08)?),
    ] {
        let spec = ChainSpec::uniform(coeffs, 6)?;
        let r = chain_report(&spec, DEFAULT_LATTICE_BUDGET, false)?;
        println!(
            "{label:<22} {:>10.6} {:>10.6} {:>10.6}",
            r.p_deferred, r.p_per_hop, r.self_correction_gain
        );
    }
    Ok(())
}
