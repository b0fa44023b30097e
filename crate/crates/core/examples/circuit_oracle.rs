//! Full Fock-space simulation of one hop, checked against the closed forms.

use klm_teleport::fock::FockVector;
use klm_teleport::oracle::{certify, run_circuit};
use klm_teleport::resource::ResourceCoeffs;
use klm_teleport::teleport::{outcome_distribution, QubitState};

fn main() -> klm_teleport::Result<()> {
    let coeffs = ResourceCoeffs::from_weights(&[0.2, 0.5, 0.3])?;
    let qubit = QubitState::diagonal();
    let run = run_circuit(&qubit, &coeffs)?;
    let analytic = outcome_distribution(&qubit, &coeffs);
    for (m, p) in run.probabilities_by_m().iter().enumerate() {
        println!(
            "m={m}: simulated {p:.12}, closed form {:.12}",
            analytic[m].probability
        );
    }
    for o in run.outcomes.iter().take(4) {
        println!(
            "pattern {}: m={} p={:.6} qubit in mode {:?}",
            FockVector::from_modes(o.pattern.clone()),
            o.m,
            o.probability,
            o.located_mode
        );
    }
    let report = certify(&coeffs, &[qubit, QubitState::h()], 1e-10)?;
    println!("certified: {}", report.passed);
    Ok(())
}
