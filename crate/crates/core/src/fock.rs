//! Sparse state vectors over multimode, two-polarization bosonic Fock space.
//!
//! A basis ket is a [`FockVector`]: one [`ModeOccupation`] (vertical and
//! horizontal photon counts) per optical mode. A [`SparseState`] maps basis
//! kets to complex amplitudes and is kept in a `BTreeMap`, so iteration order
//! (and therefore every floating-point reduction over it) is deterministic.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes whose magnitude falls below this after interference are treated
/// as exact cancellations and removed.
pub const CANCELLATION_FLOOR: f64 = 1e-14;

/// Tolerance on the norm accepted by [`SparseState::measure_counting`].
pub const MEASUREMENT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

/// Photon counts of a single optical mode.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct ModeOccupation {
    pub v_count: u32,
    pub h_count: u32,
}

impl ModeOccupation {
    pub const EMPTY: ModeOccupation = ModeOccupation {
        v_count: 0,
        h_count: 0,
    };

    pub fn new(v_count: u32, h_count: u32) -> Self {
        Self { v_count, h_count }
    }

    pub fn total(&self) -> u32 {
        self.v_count + self.h_count
    }

    pub fn count(&self, pol: Polarization) -> u32 {
        match pol {
            Polarization::H => self.h_count,
            Polarization::V => self.v_count,
        }
    }

    fn count_mut(&mut self, pol: Polarization) -> &mut u32 {
        match pol {
            Polarization::H => &mut self.h_count,
            Polarization::V => &mut self.v_count,
        }
    }
}

impl fmt::Display for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}V{}H", self.v_count, self.h_count)
    }
}

/// Occupation-number basis ket. Modes are indexed from 0 in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockVector {
    modes: Vec<ModeOccupation>,
}

impl FockVector {
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            modes: vec![ModeOccupation::EMPTY; n_modes],
        }
    }

    pub fn from_modes(modes: Vec<ModeOccupation>) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> &[ModeOccupation] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, index: usize) -> ModeOccupation {
        self.modes[index]
    }

    pub fn photon_count(&self) -> u32 {
        self.modes.iter().map(ModeOccupation::total).sum()
    }

    fn add_photon(&mut self, mode: usize, pol: Polarization) -> u32 {
        let slot = self.modes[mode].count_mut(pol);
        let prior = *slot;
        *slot += 1;
        prior
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, m) in self.modes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "⟩")
    }
}

/// The (N+1)-point Fourier transform on creation operators, restricted to an
/// ordered list of target modes. Position `k` in `target_modes` plays the role
/// of input index `k` in `ω^{kl}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierSpec {
    order: usize,
    target_modes: Vec<usize>,
}

impl FourierSpec {
    pub fn new(order: usize, target_modes: Vec<usize>) -> Result<Self> {
        if order != target_modes.len() || order == 0 {
            return Err(Error::OrderMismatch {
                order,
                targets: target_modes.len(),
            });
        }
        let mut seen = target_modes.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateTarget(w[0]));
        }
        Ok(Self {
            order,
            target_modes,
        })
    }

    /// Transform acting on modes `0..order`.
    pub fn leading(order: usize) -> Result<Self> {
        Self::new(order, (0..order).collect())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn target_modes(&self) -> &[usize] {
        &self.target_modes
    }

    /// Single-photon transition amplitude from target position `k` to `l`.
    pub fn amplitude(&self, k: usize, l: usize) -> Complex64 {
        let n = self.order as f64;
        Complex64::from_polar(1.0 / n.sqrt(), 2.0 * PI * ((k * l) % self.order) as f64 / n)
    }
}

/// One branch of a photon-counting measurement.
#[derive(Clone, Debug, Serialize)]
pub struct CountOutcome {
    /// Counts on the measured modes, in the order they were requested.
    pub counts: Vec<ModeOccupation>,
    pub probability: f64,
    /// Normalized state of the unmeasured modes, kept in ascending mode order.
    pub residual: SparseState,
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseState {
    n_modes: usize,
    #[serde(serialize_with = "serialize_terms")]
    terms: BTreeMap<FockVector, Complex64>,
    prune: f64,
}

fn serialize_terms<S>(
    terms: &BTreeMap<FockVector, Complex64>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
{
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(terms.len()))?;
    for (k, a) in terms {
        seq.serialize_element(&(k.modes(), [a.re, a.im]))?;
    }
    seq.end()
}

impl PartialEq for SparseState {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.terms == other.terms
    }
}

impl SparseState {
    pub fn vacuum(n_modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(FockVector::vacuum(n_modes), Complex64::new(1.0, 0.0));
        Self {
            n_modes,
            terms,
            prune: 0.0,
        }
    }

    pub fn zero(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: BTreeMap::new(),
            prune: 0.0,
        }
    }

    /// Builds a state by summing amplitudes of repeated kets.
    pub fn from_terms<I>(n_modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockVector, Complex64)>,
    {
        let mut state = Self::zero(n_modes);
        for (ket, amp) in terms {
            if ket.n_modes() != n_modes {
                return Err(Error::ModeOutOfRange {
                    mode: ket.n_modes().saturating_sub(1),
                    n_modes,
                });
            }
            *state.terms.entry(ket).or_default() += amp;
        }
        state.prune_below(0.0);
        Ok(state)
    }

    /// Sets the prune threshold and drops stored amplitudes at or below it.
    pub fn with_prune(mut self, threshold: f64) -> Self {
        self.prune = threshold.max(0.0);
        self.prune_below(self.prune);
        self
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune
    }

    fn prune_below(&mut self, floor: f64) {
        let floor = floor.max(self.prune);
        self.terms.retain(|_, a| a.norm() > floor);
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockVector, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, ket: &FockVector) -> Complex64 {
        self.terms.get(ket).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(Complex64::norm_sqr).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in self.terms.values_mut() {
                *a /= n;
            }
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum()
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for a in self.terms.values_mut() {
            *a *= factor;
        }
        self.prune_below(0.0);
        self
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &SparseState, factor: Complex64) -> Result<()> {
        if other.n_modes != self.n_modes {
            return Err(Error::ModeOutOfRange {
                mode: other.n_modes.saturating_sub(1),
                n_modes: self.n_modes,
            });
        }
        for (k, a) in &other.terms {
            *self.terms.entry(k.clone()).or_default() += a * factor;
        }
        self.prune_below(0.0);
        Ok(())
    }

    /// Applies a creation operator. The result is not renormalized.
    pub fn create_photon(&self, mode: usize, pol: Polarization) -> Result<SparseState> {
        if mode >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| {
                let mut ket = k.clone();
                let prior = ket.add_photon(mode, pol);
                (ket, a * f64::from(prior + 1).sqrt())
            })
            .collect();
        Ok(SparseState {
            n_modes: self.n_modes,
            terms,
            prune: self.prune,
        })
    }

    /// Applies the Fourier transform to the target modes by substituting every
    /// creation operator present in each ket. Modes outside the target list are
    /// left untouched.
    pub fn apply_fourier(&self, spec: &FourierSpec) -> Result<SparseState> {
        if let Some(&mode) = spec.target_modes.iter().find(|&&m| m >= self.n_modes) {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        let order = spec.order;
        let table: Vec<Complex64> = (0..order * order)
            .map(|i| spec.amplitude(i / order, i % order))
            .collect();

        let input: Vec<(&FockVector, &Complex64)> = self.terms.iter().collect();
        let images: Vec<BTreeMap<FockVector, Complex64>> = input
            .par_iter()
            .map(|&(ket, amp)| expand_term(ket, *amp, spec, &table))
            .collect();

        let mut out = BTreeMap::new();
        for image in images {
            for (k, a) in image {
                *out.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
            }
        }
        let mut state = SparseState {
            n_modes: self.n_modes,
            terms: out,
            prune: self.prune,
        };
        state.prune_below(CANCELLATION_FLOOR);
        Ok(state)
    }

    /// Projective photon-number measurement of both polarizations on the given
    /// modes, enumerating every outcome with nonzero probability.
    pub fn measure_counting(&self, measured_modes: &[usize]) -> Result<Vec<CountOutcome>> {
        if measured_modes.is_empty() {
            return Err(Error::EmptyMeasurement);
        }
        let mut is_measured = vec![false; self.n_modes];
        for &m in measured_modes {
            if m >= self.n_modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    n_modes: self.n_modes,
                });
            }
            if std::mem::replace(&mut is_measured[m], true) {
                return Err(Error::DuplicateMeasuredMode(m));
            }
        }
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > MEASUREMENT_NORM_TOLERANCE {
            return Err(Error::Unnormalized { norm_sqr });
        }

        let rest_modes = self.n_modes - measured_modes.len();
        let mut groups: BTreeMap<Vec<ModeOccupation>, BTreeMap<FockVector, Complex64>> =
            BTreeMap::new();
        for (ket, amp) in &self.terms {
            let counts: Vec<ModeOccupation> = measured_modes.iter().map(|&m| ket.mode(m)).collect();
            let rest = FockVector::from_modes(
                (0..self.n_modes)
                    .filter(|&m| !is_measured[m])
                    .map(|m| ket.mode(m))
                    .collect(),
            );
            groups.entry(counts).or_default().insert(rest, *amp);
        }

        Ok(groups
            .into_iter()
            .filter_map(|(counts, terms)| {
                let probability: f64 = terms.values().map(Complex64::norm_sqr).sum();
                if probability <= 0.0 {
                    return None;
                }
                let residual = SparseState {
                    n_modes: rest_modes,
                    terms,
                    prune: self.prune,
                }
                .normalized();
                Some(CountOutcome {
                    counts,
                    probability,
                    residual,
                })
            })
            .collect())
    }
}

/// Image of one ket under the transform: the ket is written as a product of
/// creation operators on the spectator vacuum, each operator is replaced by its
/// Fourier image, and the product is re-applied one operator at a time.
fn expand_term(
    ket: &FockVector,
    amp: Complex64,
    spec: &FourierSpec,
    table: &[Complex64],
) -> BTreeMap<FockVector, Complex64> {
    let order = spec.order;
    let mut spectator = ket.clone();
    let mut photons = Vec::new();
    let mut norm = 1.0;
    for (k, &mode) in spec.target_modes.iter().enumerate() {
        let occ = ket.mode(mode);
        for pol in [Polarization::V, Polarization::H] {
            let n = occ.count(pol);
            photons.extend(std::iter::repeat_n((k, pol), n as usize));
            norm *= factorial(n);
        }
        spectator.modes[mode] = ModeOccupation::EMPTY;
    }

    let mut partial = BTreeMap::new();
    partial.insert(spectator, amp / norm.sqrt());
    for (k, pol) in photons {
        let mut next: BTreeMap<FockVector, Complex64> = BTreeMap::new();
        for (base, a) in &partial {
            for (l, &mode) in spec.target_modes.iter().enumerate() {
                let mut out = base.clone();
                let prior = out.add_photon(mode, pol);
                let w = a * table[k * order + l] * f64::from(prior + 1).sqrt();
                *next.entry(out).or_default() += w;
            }
        }
        next.retain(|_, a| a.norm() > CANCELLATION_FLOOR);
        partial = next;
    }
    partial
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}
