//! Two-photon interference through the multimode Fourier transform.

use klm_teleport::fock::{FockVector, FourierSpec, ModeOccupation, Polarization, SparseState};

fn main() -> klm_teleport::Result<()> {
    // one H photon in each of two modes
    let mut state = SparseState::vacuum(2);
    state = state.create_photon(0, Polarization::H)?;
    state = state.create_photon(1, Polarization::H)?;

    let spec = FourierSpec::leading(2)?;
    let out = state.apply_fourier(&spec)?;
    for (basis, amp) in out.iter() {
        println!("{basis}: {:.6}{:+.6}i", amp.re, amp.im);
    }
    let coincidence = FockVector::from_modes(vec![ModeOccupation::new(0, 1); 2]);
    println!("coincidence amplitude: {}", out.amplitude(&coincidence));

    let counts = out.measure_counting(&[0, 1])?;
    for c in &counts {
        println!(
            "counts {} with probability {:.6}",
            FockVector::from_modes(c.counts.clone()),
            c.probability
        );
    }
    Ok(())
}
