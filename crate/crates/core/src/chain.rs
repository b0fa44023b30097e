//! Chains of teleportation hops and the two correction strategies: one Kraus
//! correction after every hop, or a single correction deferred to the end.
//!
//! With deferred correction the distortions of successive hops multiply, so an
//! outcome sequence `m_1..m_M` leaves the qubit as
//! `(alpha Π c_{m_k}, beta Π c_{m_k - 1})`, and the joint probability of that
//! sequence and a successful final correction is
//! `min(Π |c_{m_k}|^2, Π |c_{m_k - 1}|^2)`.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::resource::ResourceCoeffs;
use crate::teleport::{correct_distortion, single_success_prob, InputQubit, QubitState};

/// Default cap on the number of outcome-lattice terms summed exactly.
pub const DEFAULT_LATTICE_BUDGET: u128 = 100_000_000;

/// Relative tolerance used to decide that the accumulated distortion is trivial.
pub const SELF_CORRECTION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSpec {
    coeffs_per_hop: Vec<ResourceCoeffs>,
}

impl ChainSpec {
    pub fn new(coeffs_per_hop: Vec<ResourceCoeffs>) -> Result<Self> {
        let first = coeffs_per_hop.first().ok_or(Error::EmptyChain)?;
        let n = first.n_photons();
        if let Some((hop, c)) = coeffs_per_hop
            .iter()
            .enumerate()
            .find(|(_, c)| c.n_photons() != n)
        {
            return Err(Error::MixedPhotonNumbers {
                hop,
                expected: n,
                found: c.n_photons(),
            });
        }
        Ok(Self { coeffs_per_hop })
    }

    /// `hops` copies of the same resource.
    pub fn uniform(coeffs: ResourceCoeffs, hops: usize) -> Result<Self> {
        Self::new(vec![coeffs; hops])
    }

    pub fn hops(&self) -> usize {
        self.coeffs_per_hop.len()
    }

    pub fn n_photons(&self) -> usize {
        self.coeffs_per_hop[0].n_photons()
    }

    pub fn hop(&self, k: usize) -> &ResourceCoeffs {
        &self.coeffs_per_hop[k]
    }

    pub fn coeffs_per_hop(&self) -> &[ResourceCoeffs] {
        &self.coeffs_per_hop
    }

    /// Number of surviving outcome sequences, `N^M`.
    pub fn lattice_size(&self) -> u128 {
        (self.n_photons() as u128)
            .checked_pow(self.hops() as u32)
            .unwrap_or(u128::MAX)
    }

    fn check_budget(&self, budget: u128) -> Result<()> {
        let terms = self.lattice_size();
        if terms > budget {
            return Err(Error::BudgetExceeded { terms, budget });
        }
        Ok(())
    }
}

/// Qubit after a sequence of hops without intermediate correction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainState {
    /// Normalized distorted qubit.
    pub state: QubitState,
    /// Joint probability of the outcome sequence.
    pub probability: f64,
    /// Accumulated distortion on `|H⟩`: `Π c_{m_k}`.
    pub h_factor: Complex64,
    /// Accumulated distortion on `|V⟩`: `Π c_{m_k - 1}`.
    pub v_factor: Complex64,
}

impl ChainState {
    /// True when the accumulated distortion is a global phase, so the chain
    /// returned the input qubit without any correction.
    pub fn is_self_corrected(&self) -> bool {
        let scale = self.h_factor.norm().max(self.v_factor.norm());
        scale > 0.0 && (self.h_factor - self.v_factor).norm() <= SELF_CORRECTION_TOLERANCE * scale
    }
}

fn distortion(spec: &ChainSpec, outcomes: &[usize]) -> Result<(Complex64, Complex64)> {
    if outcomes.len() != spec.hops() {
        return Err(Error::OutcomeCount {
            hops: spec.hops(),
            outcomes: outcomes.len(),
        });
    }
    let n = spec.n_photons();
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, 0.0);
    for (hop, &m) in outcomes.iter().enumerate() {
        if m == 0 || m == n + 1 {
            return Err(Error::Destroyed { hop, m });
        }
        if m > n + 1 {
            return Err(Error::NotCorrectable { m, n });
        }
        let c = spec.hop(hop);
        a *= c.get(m as isize);
        b *= c.get(m as isize - 1);
    }
    Ok((a, b))
}

pub fn chain_state(qubit: &QubitState, spec: &ChainSpec, outcomes: &[usize]) -> Result<ChainState> {
    let (a, b) = distortion(spec, outcomes)?;
    let (h, v) = (qubit.alpha * a, qubit.beta * b);
    let probability = h.norm_sqr() + v.norm_sqr();
    let state = QubitState::normalized(h, v).ok_or(Error::ZeroProbability {
        m: *outcomes.last().unwrap_or(&0),
    })?;
    Ok(ChainState {
        state,
        probability,
        h_factor: a,
        v_factor: b,
    })
}

/// Kahan–Babuška–Neumaier running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Visits every surviving outcome sequence in lexicographic order, passing the
/// accumulated products `(Π |c_{m_k}|^2, Π |c_{m_k - 1}|^2)`. The first hop is
/// fixed to `first`.
fn walk_lattice<F>(weights: &[Vec<f64>], first: usize, visit: &mut F)
where
    F: FnMut(&[usize], f64, f64),
{
    let hops = weights.len();
    let n = weights[0].len() - 1;
    let mut path = vec![0usize; hops];
    path[0] = first;
    // prefix products: level k holds the product over hops 0..=k
    let mut up = vec![0.0; hops];
    let mut down = vec![0.0; hops];
    up[0] = weights[0][first];
    down[0] = weights[0][first - 1];

    fn recurse<F: FnMut(&[usize], f64, f64)>(
        k: usize,
        n: usize,
        weights: &[Vec<f64>],
        path: &mut [usize],
        up: &mut [f64],
        down: &mut [f64],
        visit: &mut F,
    ) {
        if k == weights.len() {
            let last = weights.len() - 1;
            visit(path, up[last], down[last]);
            return;
        }
        for m in 1..=n {
            path[k] = m;
            up[k] = up[k - 1] * weights[k][m];
            down[k] = down[k - 1] * weights[k][m - 1];
            recurse(k + 1, n, weights, path, up, down, visit);
        }
    }
    recurse(1, n, weights, &mut path, &mut up, &mut down, visit);
}

fn hop_weights(spec: &ChainSpec) -> Vec<Vec<f64>> {
    spec.coeffs_per_hop
        .iter()
        .map(ResourceCoeffs::weights)
        .collect()
}

/// Success probability with a single correction after the last hop, summed
/// exactly over the `N^M` outcome lattice.
pub fn deferred_success_prob(spec: &ChainSpec) -> Result<f64> {
    deferred_success_prob_with_budget(spec, DEFAULT_LATTICE_BUDGET)
}

pub fn deferred_success_prob_with_budget(spec: &ChainSpec, budget: u128) -> Result<f64> {
    spec.check_budget(budget)?;
    let weights = hop_weights(spec);
    let n = spec.n_photons();
    // one partition per first-hop outcome; partials are combined in order so
    // the result does not depend on the thread count
    let partials: Vec<CompensatedSum> = (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc = CompensatedSum::default();
            walk_lattice(&weights, first, &mut |_, up, down| acc.add(up.min(down)));
            acc
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in partials {
        total.add(p.sum);
        total.add(p.compensation);
    }
    Ok(total.value())
}

/// Joint success probability of every outcome sequence, lexicographic in
/// `(m_1, .., m_M)`.
pub fn outcome_table(spec: &ChainSpec, budget: u128) -> Result<Vec<(Vec<usize>, f64)>> {
    spec.check_budget(budget)?;
    let weights = hop_weights(spec);
    let mut rows = Vec::with_capacity(spec.lattice_size() as usize);
    for first in 1..=spec.n_photons() {
        walk_lattice(&weights, first, &mut |path, up, down| {
            rows.push((path.to_vec(), up.min(down)));
        });
    }
    Ok(rows)
}

/// CSV with columns `m_1..m_M,joint_success_prob`.
pub fn write_outcome_table<W: Write>(
    rows: &[(Vec<usize>, f64)],
    hops: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=hops).map(|k| format!("m_{k}")).collect();
    header.push("joint_success_prob".into());
    let io = |e: csv::Error| Error::InvalidArgument(format!("writing CSV: {e}"));
    w.write_record(&header).map_err(io)?;
    for (path, p) in rows {
        let mut rec: Vec<String> = path.iter().map(usize::to_string).collect();
        rec.push(format_sig12(*p));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Twelve significant digits.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Success probability when every hop is corrected before the next one.
pub fn per_hop_success_prob(spec: &ChainSpec) -> f64 {
    spec.coeffs_per_hop
        .iter()
        .map(single_success_prob)
        .product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub hops: usize,
    pub n_photons: usize,
    pub p_deferred: f64,
    pub p_per_hop: f64,
    pub self_correction_gain: f64,
    /// Gain relative to the per-hop strategy.
    pub relative_gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_table: Option<Vec<(Vec<usize>, f64)>>,
}

pub fn chain_report(spec: &ChainSpec, budget: u128, with_table: bool) -> Result<ChainReport> {
    let p_deferred = deferred_success_prob_with_budget(spec, budget)?;
    let p_per_hop = per_hop_success_prob(spec);
    let outcome_table = if with_table {
        Some(outcome_table(spec, budget)?)
    } else {
        None
    };
    Ok(ChainReport {
        hops: spec.hops(),
        n_photons: spec.n_photons(),
        p_deferred,
        p_per_hop,
        self_correction_gain: p_deferred - p_per_hop,
        relative_gain: (p_deferred - p_per_hop) / p_per_hop,
        outcome_table,
    })
}

/// Empirical success frequency of the deferred strategy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub successes: u64,
    /// Trajectories lost to `m = 0` or `m = N+1` on some hop.
    pub destroyed: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
    pub seed: u64,
}

const TRIALS_PER_BLOCK: u64 = 1 << 16;

/// Samples outcome trajectories hop by hop from the conditional distribution
/// of the current (distorted) qubit, then applies the final Kraus correction.
/// Each block of trials owns an RNG stream derived from `seed`, so the result
/// depends only on `seed` and `trials`.
pub fn sample_chain(
    input: &InputQubit,
    spec: &ChainSpec,
    trials: u64,
    seed: u64,
) -> MonteCarloEstimate {
    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let tallies: Vec<(u64, u64)> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let count = TRIALS_PER_BLOCK.min(trials - block * TRIALS_PER_BLOCK);
            let mut tally = (0, 0);
            for _ in 0..count {
                let qubit = match input {
                    InputQubit::State(q) => *q,
                    InputQubit::HaarAverage => QubitState::random(&mut rng),
                };
                match run_trajectory(&qubit, spec, &mut rng) {
                    Trajectory::Success => tally.0 += 1,
                    Trajectory::Destroyed => tally.1 += 1,
                    Trajectory::CorrectionFailed => {}
                }
            }
            tally
        })
        .collect();
    let (successes, destroyed) = tallies
        .iter()
        .fold((0, 0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    let estimate = successes as f64 / trials.max(1) as f64;
    MonteCarloEstimate {
        trials,
        successes,
        destroyed,
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials.max(1) as f64).sqrt(),
        seed,
    }
}

enum Trajectory {
    Success,
    Destroyed,
    CorrectionFailed,
}

fn run_trajectory<R: Rng>(qubit: &QubitState, spec: &ChainSpec, rng: &mut R) -> Trajectory {
    let n = spec.n_photons();
    let mut current = *qubit;
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, 0.0);
    for c in &spec.coeffs_per_hop {
        let (wh, wv) = (current.alpha.norm_sqr(), current.beta.norm_sqr());
        let mut u: f64 = rng.random();
        let mut m = n + 1;
        for k in 0..=n + 1 {
            let ki = k as isize;
            let p = wh * c.weight(ki) + wv * c.weight(ki - 1);
            if u < p {
                m = k;
                break;
            }
            u -= p;
        }
        if m == 0 || m == n + 1 {
            return Trajectory::Destroyed;
        }
        let (ch, cv) = (c.get(m as isize), c.get(m as isize - 1));
        a *= ch;
        b *= cv;
        match QubitState::normalized(current.alpha * ch, current.beta * cv) {
            Some(next) => current = next,
            None => return Trajectory::Destroyed,
        }
    }
    let Some(fix) = correct_distortion(&current, a, b) else {
        return Trajectory::CorrectionFailed;
    };
    if rng.random::<f64>() < fix.success_prob {
        Trajectory::Success
    } else {
        Trajectory::CorrectionFailed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::{maximally_entangled, tent};
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
    use rand_distr::StandardNormal;

    fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> ResourceCoeffs {
        let raw = (0..=n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        ResourceCoeffs::normalized(raw).unwrap()
    }

    /// Deferred probability by plain enumeration with a mixed-radix counter.
    fn brute_deferred(spec: &ChainSpec) -> f64 {
        let n = spec.n_photons();
        let hops = spec.hops();
        let mut total = 0.0;
        for idx in 0..n.pow(hops as u32) {
            let mut rest = idx;
            let (mut up, mut down) = (1.0, 1.0);
            for k in 0..hops {
                let m = rest % n + 1;
                rest /= n;
                up *= spec.hop(k).weight(m as isize);
                down *= spec.hop(k).weight(m as isize - 1);
            }
            total += f64::min(up, down);
        }
        total
    }

    #[test]
    fn two_hop_self_correction() {
        let c = tent(0.0366).unwrap();
        let spec = ChainSpec::uniform(c, 2).unwrap();
        let q =
            QubitState::normalized(Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.8)).unwrap();
        // c_1 = c_{6-1}, c_6 = c_0 so the pair (1, 6) cancels
        let s = chain_state(&q, &spec, &[1, 6]).unwrap();
        assert!(s.is_self_corrected());
        assert!((s.state.fidelity(&q) - 1.0).abs() < 1e-15);
        let s = chain_state(&q, &spec, &[1, 2]).unwrap();
        assert!(!s.is_self_corrected());
    }

    #[test]
    fn one_hop_matches_single_teleport() {
        let c = tent(0.02).unwrap();
        let q = QubitState::random(&mut ChaCha8Rng::seed_from_u64(1));
        let spec = ChainSpec::uniform(c.clone(), 1).unwrap();
        let d = crate::teleport::outcome_distribution(&q, &c);
        for rec in &d[1..=6] {
            let s = chain_state(&q, &spec, &[rec.m]).unwrap();
            assert!((s.probability - rec.probability).abs() < 1e-15);
            assert!((s.state.fidelity(&rec.post_state.unwrap()) - 1.0).abs() < 1e-15);
        }
        let p = deferred_success_prob(&spec).unwrap();
        assert!((p - single_success_prob(&c)).abs() < 1e-15);
    }

    #[test]
    fn chain_state_errors() {
        let spec = ChainSpec::uniform(maximally_entangled(3).unwrap(), 2).unwrap();
        let q = QubitState::h();
        assert_eq!(
            chain_state(&q, &spec, &[1, 4]),
            Err(Error::Destroyed { hop: 1, m: 4 })
        );
        assert_eq!(
            chain_state(&q, &spec, &[0, 1]),
            Err(Error::Destroyed { hop: 0, m: 0 })
        );
        assert_eq!(
            chain_state(&q, &spec, &[1]),
            Err(Error::OutcomeCount {
                hops: 2,
                outcomes: 1
            })
        );
        assert_eq!(ChainSpec::new(vec![]), Err(Error::EmptyChain));
        assert!(matches!(
            ChainSpec::new(vec![
                maximally_entangled(2).unwrap(),
                maximally_entangled(3).unwrap()
            ]),
            Err(Error::MixedPhotonNumbers { hop: 1, .. })
        ));
    }

    #[test]
    fn reported_six_hop_values() {
        let flat = ChainSpec::uniform(tent(0.0).unwrap(), 6).unwrap();
        let p0 = deferred_success_prob(&flat).unwrap();
        assert!((p0 - (6.0f64 / 7.0).powi(6)).abs() < 1e-12);
        assert!((per_hop_success_prob(&flat) - p0).abs() < 1e-12);

        let spec = ChainSpec::uniform(tent(0.0366).unwrap(), 6).unwrap();
        let p = deferred_success_prob(&spec).unwrap();
        assert!((p - brute_deferred(&spec)).abs() < 1e-13);
        assert!((p - 0.4152).abs() < 1e-4);
        // Π of 0.7944 over six hops
        assert!((per_hop_success_prob(&spec) - 0.7944f64.powi(6)).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = ChainSpec::uniform(maximally_entangled(6).unwrap(), 11).unwrap();
        assert!(matches!(
            deferred_success_prob(&spec),
            Err(Error::BudgetExceeded {
                budget: 100_000_000,
                ..
            })
        ));
        let small = ChainSpec::uniform(maximally_entangled(2).unwrap(), 3).unwrap();
        assert!(deferred_success_prob_with_budget(&small, 8).is_ok());
        assert!(deferred_success_prob_with_budget(&small, 7).is_err());
    }

    #[test]
    fn table_csv_layout() {
        let spec = ChainSpec::uniform(tent(0.05).unwrap(), 2).unwrap();
        let rows = outcome_table(&spec, DEFAULT_LATTICE_BUDGET).unwrap();
        assert_eq!(rows.len(), 36);
        assert_eq!(rows[0].0, vec![1, 1]);
        assert_eq!(rows[35].0, vec![6, 6]);
        let mut buf = Vec::new();
        write_outcome_table(&rows, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("m_1,m_2,joint_success_prob"));
        assert_eq!(lines.count(), 36);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        assert!((acc.value() - (1.0 + 1e-14)).abs() < 1e-18);
    }

    #[test]
    fn sampler_is_deterministic_and_close() {
        let spec = ChainSpec::uniform(maximally_entangled(6).unwrap(), 1).unwrap();
        let a = sample_chain(&InputQubit::HaarAverage, &spec, 100_000, 5);
        let b = sample_chain(&InputQubit::HaarAverage, &spec, 100_000, 5);
        assert_eq!(a, b);
        assert!((a.estimate - 6.0 / 7.0).abs() < 3.0 * a.std_error);
        let c = sample_chain(&InputQubit::HaarAverage, &spec, 100_000, 6);
        assert_ne!(a.successes, c.successes);
    }

    #[test]
    fn sampler_with_fixed_qubit() {
        let spec = ChainSpec::uniform(tent(0.05).unwrap(), 3).unwrap();
        let exact = deferred_success_prob(&spec).unwrap();
        let q = QubitState::normalized(Complex64::new(0.9, 0.0), Complex64::new(0.1, 0.4)).unwrap();
        let est = sample_chain(&InputQubit::State(q), &spec, 200_000, 42);
        assert!((est.estimate - exact).abs() < 4.0 * est.std_error);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn deferred_dominates_per_hop(seed in any::<u64>(), n in 1usize..5, hops in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = ChainSpec::new((0..hops).map(|_| random_coeffs(&mut rng, n)).collect()).unwrap();
            let d = deferred_success_prob(&spec).unwrap();
            let p = per_hop_success_prob(&spec);
            prop_assert!(d >= p - 1e-12);
            prop_assert!(d <= 1.0 + 1e-12);
            prop_assert!((d - brute_deferred(&spec)).abs() < 1e-12);
            let table: f64 = outcome_table(&spec, DEFAULT_LATTICE_BUDGET)
                .unwrap()
                .iter()
                .map(|r| r.1)
                .sum();
            prop_assert!((table - d).abs() < 1e-10);
        }

        #[test]
        fn uniform_hops_factorize(n in 1usize..7, hops in 1usize..6) {
            let spec = ChainSpec::uniform(maximally_entangled(n).unwrap(), hops).unwrap();
            let expected = (n as f64 / (n + 1) as f64).powi(hops as i32);
            prop_assert!((deferred_success_prob(&spec).unwrap() - expected).abs() < 1e-12);
            prop_assert!((per_hop_success_prob(&spec) - expected).abs() < 1e-12);
        }
    }
}
