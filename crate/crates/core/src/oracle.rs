//! First-principles simulation of one teleportation hop in Fock space, used to
//! certify the closed-form engine in [`crate::teleport`].
//!
//! Mode layout for an N-photon resource (2N+1 modes):
//! - mode 0 carries the input qubit;
//! - modes 1..=N hold the sender's half of the resource;
//! - modes N+1..=2N hold the receiver's half.
//!
//! The Fourier transform acts on modes 0..=N, which are then photon-counted.
//! For a total vertical count `1 <= m <= N` the receiver's register is
//! `|H⟩^{m-1} (qubit) |V⟩^{N-m}`, with the qubit in mode N+m.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FourierSpec, ModeOccupation, Polarization, SparseState};
use crate::resource::ResourceCoeffs;
use crate::teleport::{outcome_distribution, OutcomeRecord, QubitState};

pub const DEFAULT_MAX_PHOTONS: usize = 6;

const H_PHOTON: ModeOccupation = ModeOccupation {
    v_count: 0,
    h_count: 1,
};
const V_PHOTON: ModeOccupation = ModeOccupation {
    v_count: 1,
    h_count: 0,
};

/// One photon-counting pattern on the sender's modes.
#[derive(Clone, Debug, Serialize)]
pub struct CircuitOutcome {
    pub pattern: Vec<ModeOccupation>,
    pub m: usize,
    pub probability: f64,
    /// Normalized amplitudes of the receiver's qubit before phase correction.
    pub raw_amplitudes: Option<[Complex64; 2]>,
    /// Receiver's qubit after removing `ω^{-s}` from the `|V⟩` amplitude.
    pub conditional_qubit: Option<QubitState>,
    /// `s = Σ j (v_j + h_j) mod (N+1)` computed from the pattern.
    pub pattern_phase_exponent: u32,
    /// Exponent `k` read off the simulated amplitudes: their `|V⟩/|H⟩` ratio
    /// equals the ideal ratio times `ω^{-k}`. Absent when either amplitude
    /// vanishes.
    pub raw_phase_exponent: Option<u32>,
    /// `|measured ratio - ideal ratio · ω^{-k}|` relative to the ideal ratio.
    pub phase_residual: f64,
    /// Global mode index holding the qubit (N+m), absent when destroyed.
    pub located_mode: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitRun {
    pub n_photons: usize,
    pub qubit: QubitState,
    pub coeffs: ResourceCoeffs,
    pub outcomes: Vec<CircuitOutcome>,
}

impl CircuitRun {
    /// `p(m)` for `m = 0..=N+1`, summed over patterns.
    pub fn probabilities_by_m(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_photons + 2];
        for o in &self.outcomes {
            p[o.m] += o.probability;
        }
        p
    }

    /// Aggregates patterns into one record per `m`, in the same shape as
    /// [`outcome_distribution`]. The post state is taken from the most likely
    /// pattern with that `m`.
    pub fn outcome_records(&self) -> Vec<OutcomeRecord> {
        let n = self.n_photons;
        let probs = self.probabilities_by_m();
        (0..=n + 1)
            .map(|m| {
                let best = self
                    .outcomes
                    .iter()
                    .filter(|o| o.m == m)
                    .max_by(|a, b| a.probability.total_cmp(&b.probability));
                OutcomeRecord {
                    m,
                    probability: probs[m],
                    post_state: best.and_then(|o| o.conditional_qubit),
                    destroyed: m == 0 || m == n + 1,
                    phase_exponent: best.map(|o| o.pattern_phase_exponent),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit run serializes")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Simulator {
    pub max_photons: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            max_photons: DEFAULT_MAX_PHOTONS,
        }
    }
}

/// `|t_N⟩` on modes 1..=2N of a (2N+1)-mode register.
pub fn resource_state(coeffs: &ResourceCoeffs) -> Result<SparseState> {
    let n = coeffs.n_photons();
    let mut total = SparseState::zero(2 * n + 1);
    for (i, &c) in coeffs.coeffs().iter().enumerate() {
        let mut ket = SparseState::vacuum(2 * n + 1);
        for j in 1..=n {
            let sender = if j <= i {
                Polarization::V
            } else {
                Polarization::H
            };
            let receiver = if j <= i {
                Polarization::H
            } else {
                Polarization::V
            };
            ket = ket.create_photon(j, sender)?;
            ket = ket.create_photon(n + j, receiver)?;
        }
        total.add_scaled(&ket, c)?;
    }
    Ok(total)
}

/// Input qubit in mode 0 tensored with the resource.
pub fn initial_state(qubit: &QubitState, coeffs: &ResourceCoeffs) -> Result<SparseState> {
    let resource = resource_state(coeffs)?;
    let mut state = resource
        .create_photon(0, Polarization::H)?
        .scaled(qubit.alpha);
    state.add_scaled(&resource.create_photon(0, Polarization::V)?, qubit.beta)?;
    Ok(state)
}

impl Simulator {
    pub fn run_circuit(&self, qubit: &QubitState, coeffs: &ResourceCoeffs) -> Result<CircuitRun> {
        let n = coeffs.n_photons();
        if n > self.max_photons {
            return Err(Error::SimulatorLimit {
                n,
                max: self.max_photons,
            });
        }
        let order = n + 1;
        let state = initial_state(qubit, coeffs)?.apply_fourier(&FourierSpec::leading(order)?)?;
        let sender: Vec<usize> = (0..order).collect();
        let omega = |k: u32| Complex64::from_polar(1.0, 2.0 * PI * f64::from(k) / order as f64);

        let mut outcomes = Vec::new();
        for branch in state.measure_counting(&sender)? {
            let m = branch
                .counts
                .iter()
                .map(|c| c.v_count as usize)
                .sum::<usize>();
            let s = branch
                .counts
                .iter()
                .enumerate()
                .map(|(j, c)| j * c.total() as usize)
                .sum::<usize>()
                % order;
            let s = s as u32;

            if m == 0 || m == n + 1 {
                // receiver holds |V⟩^N (m = 0) or |H⟩^N (m = N+1)
                let fill = if m == 0 { V_PHOTON } else { H_PHOTON };
                if branch.residual.len() != 1
                    || branch
                        .residual
                        .iter()
                        .any(|(k, _)| k.modes().iter().any(|&o| o != fill))
                {
                    return Err(Error::NonconformingResidual(format!(
                        "destroyed branch m = {m} has {} receiver kets",
                        branch.residual.len()
                    )));
                }
                outcomes.push(CircuitOutcome {
                    pattern: branch.counts,
                    m,
                    probability: branch.probability,
                    raw_amplitudes: None,
                    conditional_qubit: None,
                    pattern_phase_exponent: s,
                    raw_phase_exponent: None,
                    phase_residual: 0.0,
                    located_mode: None,
                });
                continue;
            }

            let (amp_h, amp_v) = extract_qubit(&branch.residual, m)?;
            let corrected = QubitState::normalized(amp_h, amp_v * omega(s));

            let ideal_h = qubit.alpha * coeffs.get(m as isize);
            let ideal_v = qubit.beta * coeffs.get(m as isize - 1);
            let (raw_phase_exponent, phase_residual) = if [amp_h, amp_v, ideal_h, ideal_v]
                .iter()
                .all(|z| z.norm() > 1e-12)
            {
                let ideal = ideal_v / ideal_h;
                let measured = amp_v / amp_h;
                let r = measured / ideal;
                let step = 2.0 * PI / order as f64;
                let k = (-r.arg() / step).round().rem_euclid(order as f64) as u32;
                let residual = (measured - ideal * omega(k).conj()).norm() / ideal.norm();
                (Some(k), residual)
            } else {
                (None, 0.0)
            };

            outcomes.push(CircuitOutcome {
                pattern: branch.counts,
                m,
                probability: branch.probability,
                raw_amplitudes: Some([amp_h, amp_v]),
                conditional_qubit: corrected,
                pattern_phase_exponent: s,
                raw_phase_exponent,
                phase_residual,
                located_mode: Some(n + m),
            });
        }
        Ok(CircuitRun {
            n_photons: n,
            qubit: *qubit,
            coeffs: coeffs.clone(),
            outcomes,
        })
    }
}

/// Reads the qubit amplitudes out of the receiver's register, checking that
/// every other receiver mode carries the expected single photon.
fn extract_qubit(residual: &SparseState, m: usize) -> Result<(Complex64, Complex64)> {
    let slot = m - 1;
    let mut amp_h = Complex64::new(0.0, 0.0);
    let mut amp_v = Complex64::new(0.0, 0.0);
    for (ket, &amp) in residual.iter() {
        let conforms = ket.modes().iter().enumerate().all(|(j, &o)| match j {
            j if j < slot => o == H_PHOTON,
            j if j > slot => o == V_PHOTON,
            _ => o == H_PHOTON || o == V_PHOTON,
        });
        if !conforms {
            return Err(Error::NonconformingResidual(format!(
                "unexpected receiver ket {ket} for m = {m}"
            )));
        }
        if ket.mode(slot) == H_PHOTON {
            amp_h = amp;
        } else {
            amp_v = amp;
        }
    }
    Ok((amp_h, amp_v))
}

pub fn run_circuit(qubit: &QubitState, coeffs: &ResourceCoeffs) -> Result<CircuitRun> {
    Simulator::default().run_circuit(qubit, coeffs)
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub qubit: QubitState,
    pub max_probability_deviation: f64,
    pub max_infidelity: f64,
    pub phase_mismatches: usize,
    /// `m` with the largest discrepancy.
    pub worst_m: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub n_photons: usize,
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
    pub max_probability_deviation: f64,
    pub max_infidelity: f64,
    pub phase_mismatches: usize,
    pub worst_m: Option<usize>,
    pub passed: bool,
}

/// Compares simulated and closed-form outcome statistics for each qubit.
pub fn certify(
    coeffs: &ResourceCoeffs,
    qubits: &[QubitState],
    tolerance: f64,
) -> Result<CertificationReport> {
    certify_against(coeffs, coeffs, qubits, tolerance)
}

/// As [`certify`], but the closed-form side uses `analytic_coeffs`; a mismatch
/// between the two coefficient sets must be detected.
pub fn certify_against(
    simulated_coeffs: &ResourceCoeffs,
    analytic_coeffs: &ResourceCoeffs,
    qubits: &[QubitState],
    tolerance: f64,
) -> Result<CertificationReport> {
    if simulated_coeffs.n_photons() != analytic_coeffs.n_photons() {
        return Err(Error::CoefficientCount {
            expected: simulated_coeffs.n_photons() + 1,
            found: analytic_coeffs.n_photons() + 1,
        });
    }
    let sim = Simulator::default();
    let cases = qubits
        .par_iter()
        .map(|q| {
            let run = sim.run_circuit(q, simulated_coeffs)?;
            Ok(compare(
                &run,
                &outcome_distribution(q, analytic_coeffs),
                tolerance,
            ))
        })
        .collect::<Result<Vec<CaseReport>>>()?;

    let max_probability_deviation = cases
        .iter()
        .map(|c| c.max_probability_deviation)
        .fold(0.0, f64::max);
    let max_infidelity = cases.iter().map(|c| c.max_infidelity).fold(0.0, f64::max);
    let phase_mismatches = cases.iter().map(|c| c.phase_mismatches).sum();
    let worst_m = cases
        .iter()
        .max_by(|a, b| {
            a.max_probability_deviation
                .max(a.max_infidelity)
                .total_cmp(&b.max_probability_deviation.max(b.max_infidelity))
        })
        .map(|c| c.worst_m);
    let passed = max_probability_deviation <= tolerance
        && max_infidelity <= tolerance
        && phase_mismatches == 0;
    Ok(CertificationReport {
        n_photons: simulated_coeffs.n_photons(),
        tolerance,
        cases,
        max_probability_deviation,
        max_infidelity,
        phase_mismatches,
        worst_m,
        passed,
    })
}

fn compare(run: &CircuitRun, analytic: &[OutcomeRecord], tolerance: f64) -> CaseReport {
    let sim_p = run.probabilities_by_m();
    let mut worst = (0.0, 0usize);
    let mut max_dp: f64 = 0.0;
    for (m, rec) in analytic.iter().enumerate() {
        let d = (sim_p[m] - rec.probability).abs();
        max_dp = max_dp.max(d);
        if d > worst.0 {
            worst = (d, m);
        }
    }
    let mut max_infidelity: f64 = 0.0;
    let mut phase_mismatches = 0;
    for o in &run.outcomes {
        if let (Some(sim_q), Some(an_q)) = (o.conditional_qubit, analytic[o.m].post_state) {
            let inf = 1.0 - sim_q.fidelity(&an_q);
            max_infidelity = max_infidelity.max(inf);
            if inf > worst.0 {
                worst = (inf, o.m);
            }
        }
        if let Some(k) = o.raw_phase_exponent {
            if k != o.pattern_phase_exponent || o.phase_residual > tolerance.max(1e-9) {
                phase_mismatches += 1;
            }
        }
    }
    CaseReport {
        qubit: run.qubit,
        max_probability_deviation: max_dp,
        max_infidelity,
        phase_mismatches,
        worst_m: worst.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;
    use crate::resource::maximally_entangled;

    #[test]
    fn resource_state_layout() {
        let c = ResourceCoeffs::normalized(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.28f64.sqrt(), 0.0),
            Complex64::new(0.6, 0.0),
        ])
        .unwrap();
        let s = resource_state(&c).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        // i = 1: V in mode 1, H in mode 2 | H in mode 3, V in mode 4
        let ket = FockVector::from_modes(vec![
            ModeOccupation::EMPTY,
            V_PHOTON,
            H_PHOTON,
            H_PHOTON,
            V_PHOTON,
        ]);
        assert!((s.amplitude(&ket) - c.get(1)).norm() < 1e-15);
    }

    #[test]
    fn two_point_circuit_by_hand() {
        let run = run_circuit(&QubitState::h(), &maximally_entangled(1).unwrap()).unwrap();
        let p = run.probabilities_by_m();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
        assert!(p[2].abs() < 1e-12);
        let rec = &run.outcome_records()[1];
        assert!((rec.post_state.unwrap().fidelity(&QubitState::h()) - 1.0).abs() < 1e-12);
        assert!(run
            .outcomes
            .iter()
            .filter(|o| o.m == 1)
            .all(|o| o.located_mode == Some(2)));
    }

    #[test]
    fn simulator_limit() {
        let sim = Simulator { max_photons: 2 };
        assert_eq!(
            sim.run_circuit(&QubitState::h(), &maximally_entangled(3).unwrap())
                .unwrap_err(),
            Error::SimulatorLimit { n: 3, max: 2 }
        );
    }

    #[test]
    fn corrupted_analytic_side_fails() {
        let good = ResourceCoeffs::from_weights(&[0.2, 0.5, 0.3]).unwrap();
        let bad = ResourceCoeffs::from_weights(&[0.2, 0.3, 0.5]).unwrap();
        let q = [QubitState::diagonal()];
        assert!(certify(&good, &q, 1e-10).unwrap().passed);
        let report = certify_against(&good, &bad, &q, 1e-10).unwrap();
        assert!(!report.passed);
        assert!(report.worst_m.is_some());
        assert!(report.max_probability_deviation > 1e-3);
    }
}
