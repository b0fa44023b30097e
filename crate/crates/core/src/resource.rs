//! Entangled resource coefficients `c_0..c_N` for the N-photon staircase state
//! shared between sender and receiver of one teleportation hop.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Lowest tent slope: the central weight vanishes.
pub const TENT_X_MIN: f64 = -1.0 / 12.0;
/// Highest tent slope: the edge weights vanish.
pub const TENT_X_MAX: f64 = 1.0 / 9.0;

/// Normalized resource coefficients. `coeffs[i]` multiplies the ket with `i`
/// vertical photons on the sender's half.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsFile", into = "CoeffsFile")]
pub struct ResourceCoeffs {
    n_photons: usize,
    coeffs: Vec<Complex64>,
}

/// Wire form: `{"n_photons": 6, "coeffs": [[re, im], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffsFile {
    pub n_photons: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl TryFrom<CoeffsFile> for ResourceCoeffs {
    type Error = Error;

    fn try_from(file: CoeffsFile) -> Result<Self> {
        let coeffs: Vec<Complex64> = file
            .coeffs
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        ResourceCoeffs::new(file.n_photons, coeffs)
    }
}

impl From<ResourceCoeffs> for CoeffsFile {
    fn from(c: ResourceCoeffs) -> Self {
        CoeffsFile {
            n_photons: c.n_photons,
            coeffs: c.coeffs.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ResourceCoeffs {
    pub fn new(n_photons: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if n_photons < 1 {
            return Err(Error::TooFewPhotons(n_photons));
        }
        validate(n_photons, &coeffs).into_result()?;
        Ok(Self { n_photons, coeffs })
    }

    /// Rescales arbitrary nonzero coefficients to unit norm.
    pub fn normalized(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm = coeffs.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if coeffs.len() < 2 {
            return Err(Error::TooFewPhotons(coeffs.len().saturating_sub(1)));
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::CoefficientNormalization { delta: -1.0 });
        }
        let n = coeffs.len() - 1;
        Self::new(n, coeffs.into_iter().map(|c| c / norm).collect())
    }

    /// Real non-negative coefficients from weights `|c_i|^2` (rescaled to sum 1).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidArgument("negative coefficient weight".into()));
        }
        Self::normalized(
            weights
                .iter()
                .map(|w| Complex64::new(w.sqrt(), 0.0))
                .collect(),
        )
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_i`, with `c_{-1} = c_{N+1} = 0`.
    pub fn get(&self, i: isize) -> Complex64 {
        if i < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(i as usize).copied().unwrap_or_default()
    }

    /// `|c_i|^2`, with the same out-of-range convention as [`Self::get`].
    pub fn weight(&self, i: isize) -> f64 {
        self.get(i).norm_sqr()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(Complex64::norm_sqr).collect()
    }

    /// `c_i -> c_{N-i}`.
    pub fn reversed(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self {
            n_photons: self.n_photons,
            coeffs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coefficients serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoeffsFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("coefficient file: {e}")))?;
        file.try_into()
    }
}

pub fn maximally_entangled(n_photons: usize) -> Result<ResourceCoeffs> {
    if n_photons < 1 {
        return Err(Error::TooFewPhotons(n_photons));
    }
    let c = Complex64::new(1.0 / ((n_photons + 1) as f64).sqrt(), 0.0);
    ResourceCoeffs::new(n_photons, vec![c; n_photons + 1])
}

/// Slope of the six-photon tent family.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TentParams {
    x: f64,
}

impl TentParams {
    pub fn new(x: f64) -> Result<Self> {
        if !(TENT_X_MIN..=TENT_X_MAX).contains(&x) {
            return Err(Error::TentRange(x));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// `|c_i|^2 = (1 - 9x)/7 + (3 - |i - 3|) x`, clamped at zero against rounding
    /// at the range boundaries.
    pub fn weight(&self, i: usize) -> f64 {
        let rise = 3.0 - (i as f64 - 3.0).abs();
        ((1.0 - 9.0 * self.x) / 7.0 + rise * self.x).max(0.0)
    }
}

/// Six-photon resource whose weights rise linearly with slope `x` towards the
/// centre coefficient and fall symmetrically after it.
pub fn tent_family(params: TentParams) -> ResourceCoeffs {
    let coeffs = (0..=6)
        .map(|i| Complex64::new(params.weight(i).sqrt(), 0.0))
        .collect();
    ResourceCoeffs::new(6, coeffs).expect("tent weights sum to one")
}

/// Convenience wrapper that validates the slope.
pub fn tent(x: f64) -> Result<ResourceCoeffs> {
    Ok(tent_family(TentParams::new(x)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    Length { expected: usize, found: usize },
    Normalization { delta: f64 },
    NonFinite { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { expected, found } => {
                write!(f, "length: expected {expected}, found {found}")
            }
            Violation::Normalization { delta } => write!(f, "normalization: delta {delta:e}"),
            Violation::NonFinite { index } => write!(f, "coefficient {index} is not finite"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(Violation::Length { expected, found }) => {
                Err(Error::CoefficientCount { expected, found })
            }
            Some(Violation::Normalization { delta }) => {
                Err(Error::CoefficientNormalization { delta })
            }
            Some(Violation::NonFinite { index }) => Err(Error::InvalidArgument(format!(
                "coefficient {index} is not finite"
            ))),
        }
    }
}

/// Checks length and normalization of a raw coefficient list.
pub fn validate(n_photons: usize, coeffs: &[Complex64]) -> ValidationReport {
    let mut violations = Vec::new();
    if coeffs.len() != n_photons + 1 {
        violations.push(Violation::Length {
            expected: n_photons + 1,
            found: coeffs.len(),
        });
    }
    if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
        violations.push(Violation::NonFinite { index });
    }
    let delta = coeffs.iter().map(Complex64::norm_sqr).sum::<f64>() - 1.0;
    if delta.is_nan() || delta.abs() > NORMALIZATION_TOLERANCE {
        violations.push(Violation::Normalization { delta });
    }
    ValidationReport { violations }
}
