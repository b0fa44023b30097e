//! Acceptance checks. Every check prints one `PASS`/`FAIL` line and each test
//! fails if any of its lines failed.

use std::process::Command;
use std::time::{Duration, Instant};

use klm_teleport::chain::{
    chain_state, deferred_success_prob, per_hop_success_prob, sample_chain, ChainSpec,
};
use klm_teleport::oracle::run_circuit;
use klm_teleport::repro::regression_table;
use klm_teleport::resource::{maximally_entangled, tent, ResourceCoeffs};
use klm_teleport::teleport::{
    kraus_correct, outcome_distribution, outcome_probabilities, single_success_prob, InputQubit,
    QubitState,
};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PROPERTY_CASES: u32 = 1000;

struct Report {
    criterion: u8,
    failures: usize,
}

impl Report {
    fn new(criterion: u8) -> Self {
        Self {
            criterion,
            failures: 0,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        if !ok {
            self.failures += 1;
        }
        println!(
            "[criterion {}] {} {name}: {detail}",
            self.criterion,
            if ok { "PASS" } else { "FAIL" }
        );
    }

    fn within(&mut self, name: &str, computed: f64, reference: f64, tol: f64) {
        let dev = (computed - reference).abs();
        self.check(
            name,
            dev <= tol,
            format!(
                "computed {computed:.12}, reference {reference}, |dev| {dev:.3e} (tol {tol:.0e})"
            ),
        );
    }

    fn elapsed(&mut self, name: &str, took: Duration, limit: Duration) {
        self.check(
            name,
            took <= limit,
            format!(
                "{:.3} s (limit {:.0} s)",
                took.as_secs_f64(),
                limit.as_secs_f64()
            ),
        );
    }

    fn finish(self) {
        assert_eq!(self.failures, 0, "{} check(s) failed", self.failures);
    }
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn coeffs(n_max: usize) -> impl Strategy<Value = ResourceCoeffs> {
    (1..=n_max)
        .prop_flat_map(|n| prop::collection::vec(complex(), n + 1))
        .prop_filter_map("zero vector", |raw| {
            let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
            (norm > 1e-6).then(|| ResourceCoeffs::normalized(raw).unwrap())
        })
}

fn qubit() -> impl Strategy<Value = QubitState> {
    (complex(), complex()).prop_filter_map("zero qubit", |(a, b)| QubitState::normalized(a, b))
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: PROPERTY_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn run_property<S, F>(report: &mut Report, name: &str, strategy: S, test: F)
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let outcome = runner().run(&strategy, test);
    let detail = match &outcome {
        Ok(()) => format!("{PROPERTY_CASES} cases"),
        Err(e) => e.to_string(),
    };
    report.check(name, outcome.is_ok(), detail);
}

#[test]
fn criterion_1_single_hop_maximal_entanglement() {
    let mut r = Report::new(1);
    for n in 1..=12 {
        let p = single_success_prob(&maximally_entangled(n).unwrap());
        r.within(
            &format!("uniform N={n}"),
            p,
            n as f64 / (n + 1) as f64,
            1e-12,
        );
    }
    r.finish();
}

#[test]
fn criterion_2_headline_numbers() {
    let mut r = Report::new(2);
    let start = Instant::now();
    let spec0 = ChainSpec::uniform(tent(0.0).unwrap(), 6).unwrap();
    let spec = ChainSpec::uniform(tent(0.0366).unwrap(), 6).unwrap();
    let p0 = deferred_success_prob(&spec0).unwrap();
    let p = deferred_success_prob(&spec).unwrap();
    let p_hop = per_hop_success_prob(&spec);
    let took = start.elapsed();

    r.within("deferred x=0, M=6", p0, 0.3965, 1e-4);
    r.within(
        "deferred x=0 equals (6/7)^6",
        p0,
        (6.0f64 / 7.0).powi(6),
        1e-12,
    );
    r.within("deferred x=0.0366, M=6", p, 0.4152, 1e-4);
    r.within("per-hop x=0.0366, M=6", p_hop, 0.2511, 1e-4);
    r.within("gain vs x=0", p - p0, 0.0187, 1e-4);
    r.within("gain vs per-hop", p - p_hop, 0.1641, 1e-4);
    r.within("relative gain vs x=0", (p - p0) / p0, 0.0471, 1e-3);
    r.within(
        "relative gain vs per-hop",
        (p - p_hop) / p_hop,
        0.6535,
        1e-3,
    );
    r.elapsed("runtime", took, Duration::from_secs(1));
    r.finish();
}

#[test]
fn criterion_3_sweep_optimum() {
    let mut r = Report::new(3);
    let start = Instant::now();
    let six = klm_teleport::optimize::sweep_x(6, 0.0, 0.09, 91).unwrap();
    let one = klm_teleport::optimize::sweep_x(1, 0.0, 0.09, 91).unwrap();
    let took = start.elapsed();
    r.within("argmax x, M=6", six.argmax_x, 0.0366, 5e-4);
    r.within("max p, M=6", six.max_p, 0.4152, 1e-4);
    r.within("argmax x, M=1", one.argmax_x, 0.0, 1e-4);
    r.elapsed("runtime", took, Duration::from_secs(10));
    r.finish();
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> ResourceCoeffs {
    let raw = (0..=n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ResourceCoeffs::normalized(raw).unwrap()
}

#[test]
fn criterion_4_oracle_equivalence() {
    let mut r = Report::new(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = Instant::now();
    for n in 1..=3 {
        let (mut dp, mut infid, mut phase_bad) = (0.0f64, 0.0f64, 0usize);
        for _ in 0..25 {
            let c = random_coeffs(&mut rng, n);
            let q = QubitState::random(&mut rng);
            let run = run_circuit(&q, &c).unwrap();
            let sim = run.outcome_records();
            let analytic = outcome_distribution(&q, &c);
            for (s, a) in sim.iter().zip(&analytic) {
                dp = dp.max((s.probability - a.probability).abs());
                if let (Some(sq), Some(aq)) = (s.post_state, a.post_state) {
                    infid = infid.max(1.0 - sq.fidelity(&aq));
                }
            }
            phase_bad += run
                .outcomes
                .iter()
                .filter(|o| {
                    o.raw_phase_exponent
                        .is_some_and(|k| k != o.pattern_phase_exponent)
                })
                .count();
        }
        r.check(
            &format!("N={n} probabilities"),
            dp <= 1e-10,
            format!("max |dp| {dp:.3e} over 25 pairs (tol 1e-10)"),
        );
        r.check(
            &format!("N={n} conditional states"),
            infid <= 1e-10,
            format!("max infidelity {infid:.3e} (tol 1e-10)"),
        );
        r.check(
            &format!("N={n} phase exponents"),
            phase_bad == 0,
            format!("{phase_bad} mismatched patterns"),
        );
    }
    r.elapsed("small-N runtime", start.elapsed(), Duration::from_secs(60));

    let start = Instant::now();
    let q = QubitState::random(&mut rng);
    for x in [0.0, 0.0366] {
        let c = tent(x).unwrap();
        let sim = run_circuit(&q, &c).unwrap().probabilities_by_m();
        let dp = outcome_distribution(&q, &c)
            .iter()
            .map(|a| (sim[a.m] - a.probability).abs())
            .fold(0.0, f64::max);
        r.check(
            &format!("N=6 x={x} probabilities"),
            dp <= 1e-8,
            format!("max |dp| {dp:.3e} (tol 1e-8)"),
        );
    }
    r.elapsed("N=6 runtime", start.elapsed(), Duration::from_secs(600));
    r.finish();
}

#[test]
fn criterion_5_property_suites() {
    let mut r = Report::new(5);

    run_property(
        &mut r,
        "outcome probabilities sum to one",
        (coeffs(8), qubit(), any::<bool>()),
        |(c, q, haar)| {
            let input = if haar {
                InputQubit::HaarAverage
            } else {
                InputQubit::State(q)
            };
            let total: f64 = outcome_probabilities(&input, &c).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "total {total}");
            Ok(())
        },
    );

    run_property(
        &mut r,
        "deferred dominates per-hop",
        (1usize..=4, 1usize..=4).prop_flat_map(|(n, hops)| {
            prop::collection::vec(
                prop::collection::vec(complex(), n + 1).prop_filter_map("zero", |raw| {
                    let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
                    (norm > 1e-6).then(|| ResourceCoeffs::normalized(raw).unwrap())
                }),
                hops,
            )
        }),
        |per_hop| {
            let spec = ChainSpec::new(per_hop).unwrap();
            let deferred = deferred_success_prob(&spec).unwrap();
            let per = per_hop_success_prob(&spec);
            prop_assert!(
                deferred >= per - 1e-12,
                "deferred {deferred} < per-hop {per}"
            );
            Ok(())
        },
    );

    run_property(
        &mut r,
        "Kraus success restores the input",
        (coeffs(8), qubit(), 0.0f64..1.0),
        |(c, q, u)| {
            let n = c.n_photons();
            let m = 1 + ((u * n as f64) as usize).min(n - 1);
            let Some(post) = outcome_distribution(&q, &c)[m].post_state else {
                return Ok(());
            };
            match kraus_correct(&post, &c, m) {
                Ok(out) => {
                    let fixed = out.corrected_state.expect("nonzero success branch");
                    prop_assert!(fixed.fidelity(&q) >= 1.0 - 1e-12);
                }
                Err(_) => {
                    prop_assert!(c.weight(m as isize) * c.weight(m as isize - 1) < 1e-24);
                }
            }
            Ok(())
        },
    );

    run_property(
        &mut r,
        "objective invariant under coefficient reversal",
        (coeffs(5), 1usize..=3),
        |(c, hops)| {
            let fwd = ChainSpec::uniform(c.clone(), hops).unwrap();
            let rev = ChainSpec::uniform(c.reversed(), hops).unwrap();
            let (a, b) = (
                deferred_success_prob(&fwd).unwrap(),
                deferred_success_prob(&rev).unwrap(),
            );
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(
                (single_success_prob(&c) - single_success_prob(&c.reversed())).abs() < 1e-12
            );
            Ok(())
        },
    );

    // c_N is fixed by c_1 c_N = c_0 c_{N-1}, so outcomes (1, N) self-correct.
    run_property(
        &mut r,
        "self-correction is exact",
        (3usize..=8)
            .prop_flat_map(|n| (prop::collection::vec(complex(), n), qubit()))
            .prop_filter_map("degenerate", |(mut raw, q)| {
                let n = raw.len();
                if raw[1].norm() < 1e-3 {
                    return None;
                }
                let c_n = raw[0] * raw[n - 1] / raw[1];
                raw.push(c_n);
                let c = ResourceCoeffs::normalized(raw).ok()?;
                let reachable = c.weight(0) * c.weight(1) * c.weight(n as isize - 1) > 1e-12;
                reachable.then_some((c, q))
            }),
        |(c, q)| {
            let n = c.n_photons();
            let spec = ChainSpec::uniform(c, 2).unwrap();
            let out = chain_state(&q, &spec, &[1, n]).unwrap();
            prop_assert!(out.is_self_corrected());
            prop_assert!(out.state.fidelity(&q) >= 1.0 - 1e-12);
            Ok(())
        },
    );

    run_property(
        &mut r,
        "uniform coefficients are single-hop optimal",
        (1usize..=12).prop_flat_map(|n| prop::collection::vec(1e-9f64..1.0, n + 1)),
        |raw| {
            let n = raw.len() - 1;
            let c = ResourceCoeffs::from_weights(&raw).unwrap();
            let bound = n as f64 / (n + 1) as f64 + 1e-12;
            prop_assert!(single_success_prob(&c) <= bound);
            Ok(())
        },
    );

    r.finish();
}

#[test]
fn criterion_6_monte_carlo_consistency() {
    let mut r = Report::new(6);
    let spec = ChainSpec::uniform(tent(0.0366).unwrap(), 6).unwrap();
    let first = sample_chain(&InputQubit::HaarAverage, &spec, 1_000_000, 7);
    let second = sample_chain(&InputQubit::HaarAverage, &spec, 1_000_000, 7);
    let dev = (first.estimate - 0.4152).abs();
    r.check(
        "10^6 trials within 4 standard errors",
        dev <= 4.0 * first.std_error,
        format!(
            "estimate {:.6}, |dev| {dev:.3e}, 4 SE {:.3e}",
            first.estimate,
            4.0 * first.std_error
        ),
    );
    r.check(
        "deterministic under fixed seed",
        first == second,
        format!("{} vs {} successes", first.successes, second.successes),
    );
    r.finish();
}

#[test]
fn criterion_7_repro_subcommand() {
    let mut r = Report::new(7);
    let output = Command::new(env!("CARGO_BIN_EXE_klm-teleport"))
        .arg("repro")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&output.stdout);
    print!("{stdout}");
    let rows = regression_table().unwrap();
    let listed = rows.iter().all(|row| stdout.contains(&row.name));
    r.check(
        "table lists every row",
        listed,
        format!("{} rows", rows.len()),
    );
    r.check(
        "every row PASS",
        !stdout.contains("FAIL"),
        format!("{} FAIL rows", stdout.matches("FAIL").count()),
    );
    r.check(
        "exit code 0",
        output.status.code() == Some(0),
        format!("exit code {:?}", output.status.code()),
    );
    r.finish();
}
