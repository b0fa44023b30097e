//! Closed-form single-hop teleportation: outcome distribution over the total
//! vertical count `m`, the distorted conditional qubit, and the two-outcome
//! Kraus correction that restores it.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resource::ResourceCoeffs;

pub const QUBIT_TOLERANCE: f64 = 1e-12;

/// Polarization qubit `alpha|H⟩ + beta|V⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl QubitState {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if n.is_nan() || (n - 1.0).abs() > QUBIT_TOLERANCE {
            return Err(Error::QubitNormalization(n));
        }
        Ok(Self { alpha, beta })
    }

    /// Rescales `(alpha, beta)` to unit norm; `None` for the zero vector.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Option<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        (n > 0.0 && n.is_finite()).then(|| Self {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    pub fn h() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn v() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn diagonal() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: Complex64::new(h, 0.0),
            beta: Complex64::new(h, 0.0),
        }
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            if let Some(q) =
                Self::normalized(Complex64::new(z[0], z[1]), Complex64::new(z[2], z[3]))
            {
                return q;
            }
        }
    }

    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// `|⟨self|other⟩|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &QubitState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Input qubit for probability statements: a concrete state, or the average
/// over Haar-random inputs (which replaces `|alpha|^2`, `|beta|^2` by 1/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputQubit {
    State(QubitState),
    HaarAverage,
}

impl InputQubit {
    /// `(|alpha|^2, |beta|^2)` or their Haar averages.
    pub fn weights(&self) -> (f64, f64) {
        match self {
            InputQubit::State(q) => (q.alpha.norm_sqr(), q.beta.norm_sqr()),
            InputQubit::HaarAverage => (0.5, 0.5),
        }
    }
}

impl From<QubitState> for InputQubit {
    fn from(q: QubitState) -> Self {
        InputQubit::State(q)
    }
}

/// One value of the total vertical count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeRecord {
    pub m: usize,
    pub probability: f64,
    /// Phase-corrected conditional qubit; absent when destroyed or impossible.
    pub post_state: Option<QubitState>,
    pub destroyed: bool,
    /// `Σ j (v_j + h_j) mod (N+1)`; only filled by the circuit simulator.
    pub phase_exponent: Option<u32>,
}

/// `p(m) = (|alpha|^2 |c_m|^2, |beta|^2 |c_{m-1}|^2)` summed, for `m = 0..=N+1`.
pub fn outcome_probabilities(input: &InputQubit, coeffs: &ResourceCoeffs) -> Vec<f64> {
    let (wh, wv) = input.weights();
    let n = coeffs.n_photons() as isize;
    (0..=n + 1)
        .map(|m| wh * coeffs.weight(m) + wv * coeffs.weight(m - 1))
        .collect()
}

pub fn outcome_distribution(qubit: &QubitState, coeffs: &ResourceCoeffs) -> Vec<OutcomeRecord> {
    let n = coeffs.n_photons();
    outcome_probabilities(&InputQubit::State(*qubit), coeffs)
        .into_iter()
        .enumerate()
        .map(|(m, probability)| {
            let destroyed = m == 0 || m == n + 1;
            let post_state = if destroyed {
                None
            } else {
                let mi = m as isize;
                QubitState::normalized(
                    qubit.alpha * coeffs.get(mi),
                    qubit.beta * coeffs.get(mi - 1),
                )
            };
            OutcomeRecord {
                m,
                probability,
                post_state,
                destroyed,
                phase_exponent: None,
            }
        })
        .collect()
}

/// Probability that the qubit is destroyed (`m = 0` or `m = N+1`).
pub fn failure_probability(input: &InputQubit, coeffs: &ResourceCoeffs) -> f64 {
    let p = outcome_probabilities(input, coeffs);
    p[0] + p[p.len() - 1]
}

/// Diagonal Kraus pair undoing a distortion `diag(a, b)` on `(|H⟩, |V⟩)`.
///
/// When `|b| <= |a|` the success operator is `diag(b/a, 1)`, otherwise
/// `diag(1, a/b)`; the failure operator is `sqrt(1 - |ratio|^2)` on the same
/// basis vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KrausCorrection {
    pub success: [Complex64; 2],
    pub failure: [f64; 2],
}

impl KrausCorrection {
    /// `None` when both distortion factors vanish.
    pub fn for_distortion(a: Complex64, b: Complex64) -> Option<Self> {
        let one = Complex64::new(1.0, 0.0);
        if a.norm() >= b.norm() {
            if a.norm() == 0.0 {
                return None;
            }
            let r = b / a;
            Some(Self {
                success: [r, one],
                failure: [(1.0 - r.norm_sqr()).max(0.0).sqrt(), 0.0],
            })
        } else {
            let r = a / b;
            Some(Self {
                success: [one, r],
                failure: [0.0, (1.0 - r.norm_sqr()).max(0.0).sqrt()],
            })
        }
    }

    /// Unnormalized `E_S |post⟩`.
    pub fn apply_success(&self, post: &QubitState) -> (Complex64, Complex64) {
        (self.success[0] * post.alpha, self.success[1] * post.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionOutcome {
    pub success_prob: f64,
    pub corrected_state: Option<QubitState>,
}

pub(crate) fn correct_distortion(
    post: &QubitState,
    a: Complex64,
    b: Complex64,
) -> Option<CorrectionOutcome> {
    let kraus = KrausCorrection::for_distortion(a, b)?;
    let (h, v) = kraus.apply_success(post);
    let success_prob = (h.norm_sqr() + v.norm_sqr()).min(1.0);
    Some(CorrectionOutcome {
        success_prob,
        corrected_state: QubitState::normalized(h, v),
    })
}

/// Applies the Kraus correction matched to outcome `m` to the conditional
/// qubit `post`.
pub fn kraus_correct(
    post: &QubitState,
    coeffs: &ResourceCoeffs,
    m: usize,
) -> Result<CorrectionOutcome> {
    let n = coeffs.n_photons();
    if m == 0 || m > n {
        return Err(Error::NotCorrectable { m, n });
    }
    let mi = m as isize;
    correct_distortion(post, coeffs.get(mi), coeffs.get(mi - 1)).ok_or(Error::ZeroProbability { m })
}

/// `Σ_{m=1}^{N} min(|c_{m-1}|^2, |c_m|^2)`, independent of the input qubit.
pub fn single_success_prob(coeffs: &ResourceCoeffs) -> f64 {
    let w = coeffs.weights();
    w.windows(2).map(|p| p[0].min(p[1])).sum()
}
