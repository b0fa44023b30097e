//! Command-line front end. [`run`] parses arguments, dispatches to the engines
//! and returns the process exit code: 0 on success, 1 when a certification or
//! regression check fails, 2 for usage and validation errors.
//!
//! Every subcommand accepts `--config FILE`, a TOML table whose keys are flag
//! names (`tent = 0.0366`, `hops = 6`, `haar = true`). Flags given on the
//! command line take precedence. `KLM_TELEPORT_THREADS` sets the worker count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;

use crate::chain::{
    chain_report, format_sig12, per_hop_success_prob, sample_chain, write_outcome_table, ChainSpec,
    DEFAULT_LATTICE_BUDGET,
};
use crate::error::{Error, Result};
use crate::optimize::{optimize_coeffs, sweep_x};
use crate::oracle::{certify_against, CertificationReport, DEFAULT_MAX_PHOTONS};
use crate::repro::{regression_table, render_table};
use crate::resource::{maximally_entangled, tent, CoeffsFile, ResourceCoeffs};
use crate::teleport::{
    outcome_distribution, outcome_probabilities, single_success_prob, InputQubit, QubitState,
};

pub const THREADS_ENV: &str = "KLM_TELEPORT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "klm-teleport",
    version,
    about = "Multi-hop linear-optical teleportation with arbitrary entangled resources",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file with default flag values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Outcome table and success probability of one hop
    Single(SingleArgs),
    /// Deferred versus per-hop correction over several hops
    Chain(ChainArgs),
    /// Chain success probability along the six-photon tent family
    Sweep(SweepArgs),
    /// Search general coefficient vectors for the best chain probability
    Optimize(OptimizeArgs),
    /// Check the closed-form engine against full Fock-space simulation
    Certify(CertifyArgs),
    /// Print the regression table of the headline numbers
    Repro,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("resource").args(["max_entangled", "tent", "coeffs"])))]
pub struct ResourceArgs {
    /// Maximally entangled resource with N photons
    #[arg(long, value_name = "N")]
    pub max_entangled: Option<usize>,
    /// Six-photon tent family with slope X
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub tent: Option<f64>,
    /// JSON file {"n_photons": N, "coeffs": [[re, im], ...]}
    #[arg(long, value_name = "FILE")]
    pub coeffs: Option<PathBuf>,
}

impl ResourceArgs {
    fn is_set(&self) -> bool {
        self.max_entangled.is_some() || self.tent.is_some() || self.coeffs.is_some()
    }

    fn resolve(&self) -> Result<ResourceCoeffs> {
        if let Some(n) = self.max_entangled {
            maximally_entangled(n)
        } else if let Some(x) = self.tent {
            tent(x)
        } else if let Some(path) = &self.coeffs {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("reading {}: {e}", path.display())))?;
            ResourceCoeffs::from_json(&text)
        } else {
            Err(Error::InvalidArgument(
                "one of --max-entangled, --tent or --coeffs is required".into(),
            ))
        }
    }
}

#[derive(Debug, Args)]
pub struct QubitArgs {
    /// H amplitude as "re,im" (default: Haar average over inputs)
    #[arg(
        long,
        value_name = "RE,IM",
        requires = "beta",
        conflicts_with = "haar",
        allow_hyphen_values = true
    )]
    pub alpha: Option<String>,
    /// V amplitude as "re,im"
    #[arg(
        long,
        value_name = "RE,IM",
        requires = "alpha",
        allow_hyphen_values = true
    )]
    pub beta: Option<String>,
    /// Average over Haar-random input qubits (the default)
    #[arg(long, conflicts_with = "beta")]
    pub haar: bool,
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::InvalidArgument(format!("expected \"re,im\", got {text:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(re.parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(Complex64::new(
            re.parse().map_err(|_| bad())?,
            im.parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

impl QubitArgs {
    fn resolve(&self) -> Result<InputQubit> {
        match (&self.alpha, &self.beta) {
            (Some(a), Some(b)) => {
                let q = QubitState::new(parse_complex(a)?, parse_complex(b)?)?;
                Ok(InputQubit::State(q))
            }
            _ => Ok(InputQubit::HaarAverage),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[command(flatten)]
    pub resource: ResourceArgs,
    #[command(flatten)]
    pub qubit: QubitArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub resource: ResourceArgs,
    #[command(flatten)]
    pub qubit: QubitArgs,
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    /// Write the outcome-resolved table as CSV
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Also estimate the deferred probability from this many sampled trajectories
    #[arg(long, value_name = "TRIALS")]
    pub monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest outcome lattice summed exactly
    #[arg(long, default_value_t = DEFAULT_LATTICE_BUDGET)]
    pub budget: u128,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 6)]
    pub hops: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 0.09, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 91)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub hops: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the best coefficients as a coefficient file
    #[arg(long, value_name = "PATH")]
    pub save: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Photon number for randomly drawn coefficients
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub resource: ResourceArgs,
    /// Number of random qubits (and coefficient vectors, without a resource flag)
    #[arg(long, default_value_t = 25)]
    pub cases: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt the closed-form side to exercise the failure path
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    configure_threads();
    let cli = match parse_with_config(&args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
        Err(ParseFailure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Config(String),
}

/// Mutually exclusive flag families: a command-line member of a family
/// suppresses every config value from the same family.
const FLAG_FAMILIES: &[&[&str]] = &[
    &["max-entangled", "tent", "coeffs"],
    &["alpha", "beta", "haar"],
];

fn parse_with_config(args: &[String]) -> std::result::Result<Cli, ParseFailure> {
    let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let extra = config_args(path, args).map_err(ParseFailure::Config)?;
    // program, subcommand, config-derived flags, then the user's flags
    let sub = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-') && is_subcommand(a))
        .map(|i| i + 1)
        .ok_or_else(|| ParseFailure::Config("no subcommand".into()))?;
    let mut merged: Vec<String> = args[..=sub].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[sub + 1..]);
    Cli::try_parse_from(merged).map_err(ParseFailure::Clap)
}

fn is_subcommand(word: &str) -> bool {
    matches!(
        word,
        "single" | "chain" | "sweep" | "optimize" | "certify" | "repro"
    )
}

fn config_args(path: &Path, cli_args: &[String]) -> std::result::Result<Vec<String>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("reading config {}: {e}", path.display()))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| format!("parsing config {}: {e}", path.display()))?;
    let on_cli = |flag: &str| {
        let long = format!("--{flag}");
        cli_args
            .iter()
            .any(|a| a == &long || a.starts_with(&format!("{long}=")))
    };
    let mut extra = Vec::new();
    for (key, value) in table {
        let flag = key.replace('_', "-");
        if flag == "config" {
            continue;
        }
        let family = FLAG_FAMILIES
            .iter()
            .find(|f| f.contains(&flag.as_str()))
            .copied()
            .unwrap_or(&[]);
        if on_cli(&flag) || family.iter().any(|f| on_cli(f)) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(format!("--{flag}")),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => extra.push(format!("--{flag}={s}")),
            toml::Value::Integer(i) => extra.push(format!("--{flag}={i}")),
            toml::Value::Float(x) => extra.push(format!("--{flag}={x}")),
            other => return Err(format!("config key {key}: unsupported value {other}")),
        }
    }
    Ok(extra)
}

fn dispatch(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Single(a) => cmd_single(a, out),
        Command::Chain(a) => cmd_chain(a, out),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Repro => cmd_repro(out),
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("I/O: {e}"))
}

/// Sends `body` to the output file when given, otherwise to `out`.
fn emit(output: &OutputArgs, body: &str, out: &mut dyn Write) -> Result<()> {
    match &output.output {
        Some(path) => fs::write(path, body).map_err(io_error),
        None => out.write_all(body.as_bytes()).map_err(io_error),
    }
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn input_json(input: &InputQubit) -> serde_json::Value {
    match input {
        InputQubit::HaarAverage => json!("haar"),
        InputQubit::State(q) => json!({
            "alpha": [q.alpha.re, q.alpha.im],
            "beta": [q.beta.re, q.beta.im],
        }),
    }
}

pub fn cmd_single(args: &SingleArgs, out: &mut dyn Write) -> Result<i32> {
    let coeffs = args.resource.resolve()?;
    let input = args.qubit.resolve()?;
    let n = coeffs.n_photons();
    let probs = outcome_probabilities(&input, &coeffs);
    let joint: Vec<f64> = (0..=n + 1)
        .map(|m| {
            if m == 0 || m == n + 1 {
                0.0
            } else {
                coeffs.weight(m as isize).min(coeffs.weight(m as isize - 1))
            }
        })
        .collect();
    let post_states = match input {
        InputQubit::State(q) => Some(outcome_distribution(&q, &coeffs)),
        InputQubit::HaarAverage => None,
    };
    let failure = probs[0] + probs[n + 1];
    let success = single_success_prob(&coeffs);

    let body = match args.output.format {
        Format::Json => {
            let outcomes: Vec<serde_json::Value> = (0..=n + 1)
                .map(|m| {
                    let mut row = json!({
                        "m": m,
                        "probability": probs[m],
                        "destroyed": m == 0 || m == n + 1,
                        "joint_success_probability": joint[m],
                    });
                    if let Some(q) = post_states.as_ref().and_then(|d| d[m].post_state) {
                        row["post_state"] = json!({
                            "alpha": [q.alpha.re, q.alpha.im],
                            "beta": [q.beta.re, q.beta.im],
                        });
                    }
                    row
                })
                .collect();
            json_text(&json!({
                "n_photons": n,
                "input": input_json(&input),
                "outcomes": outcomes,
                "success_probability": success,
                "failure_probability": failure,
            }))
        }
        Format::Csv => {
            let mut s = String::from("m,probability,joint_success_prob\n");
            for m in 0..=n + 1 {
                s.push_str(&format!(
                    "{m},{},{}\n",
                    format_sig12(probs[m]),
                    format_sig12(joint[m])
                ));
            }
            s
        }
    };
    emit(&args.output, &body, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_chain(args: &ChainArgs, out: &mut dyn Write) -> Result<i32> {
    let coeffs = args.resource.resolve()?;
    let input = args.qubit.resolve()?;
    let spec = ChainSpec::uniform(coeffs, args.hops)?;
    let exact = match chain_report(&spec, args.budget, false) {
        Ok(r) => Some(r),
        Err(Error::BudgetExceeded { .. }) if args.monte_carlo.is_some() => None,
        Err(e) => return Err(e),
    };
    if let Some(path) = &args.table {
        let rows = crate::chain::outcome_table(&spec, args.budget)?;
        let file = fs::File::create(path).map_err(io_error)?;
        write_outcome_table(&rows, spec.hops(), file)?;
    }
    let mc = args
        .monte_carlo
        .map(|trials| sample_chain(&input, &spec, trials, args.seed));
    let p_per_hop = per_hop_success_prob(&spec);

    let body = match args.output.format {
        Format::Json => {
            let mut v = json!({
                "hops": spec.hops(),
                "n_photons": spec.n_photons(),
                "p_deferred": exact.as_ref().map(|r| r.p_deferred),
                "p_per_hop": p_per_hop,
                "self_correction_gain": exact.as_ref().map(|r| r.self_correction_gain),
                "relative_gain": exact.as_ref().map(|r| r.relative_gain),
            });
            if let Some(mc) = &mc {
                v["monte_carlo"] = json!({
                    "input": input_json(&input),
                    "trials": mc.trials,
                    "successes": mc.successes,
                    "destroyed": mc.destroyed,
                    "estimate": mc.estimate,
                    "std_error": mc.std_error,
                    "seed": mc.seed,
                });
            }
            json_text(&v)
        }
        Format::Csv => {
            let cell = |x: Option<f64>| x.map(format_sig12).unwrap_or_default();
            let mut s = String::from(
                "hops,n_photons,p_deferred,p_per_hop,self_correction_gain,relative_gain,mc_estimate,mc_std_error\n",
            );
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                spec.hops(),
                spec.n_photons(),
                cell(exact.as_ref().map(|r| r.p_deferred)),
                format_sig12(p_per_hop),
                cell(exact.as_ref().map(|r| r.self_correction_gain)),
                cell(exact.as_ref().map(|r| r.relative_gain)),
                cell(mc.as_ref().map(|m| m.estimate)),
                cell(mc.as_ref().map(|m| m.std_error)),
            ));
            s
        }
    };
    emit(&args.output, &body, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let result = sweep_x(args.hops, args.from, args.to, args.steps)?;
    match args.output.format {
        Format::Json => emit(&args.output, &json_text(&result), out)?,
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            emit(&args.output, &String::from_utf8_lossy(&buf), out)?;
            let optimum = json_text(&json!({
                "hops": result.hops,
                "argmax_x": result.argmax_x,
                "max_p": result.max_p,
            }));
            // keep stdout pure CSV when it carries the samples
            if args.output.output.is_some() {
                out.write_all(optimum.as_bytes()).map_err(io_error)?;
            } else {
                err.write_all(optimum.as_bytes()).map_err(io_error)?;
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<i32> {
    let best = optimize_coeffs(args.n, args.hops, args.seed)?;
    if let Some(path) = &args.save {
        fs::write(path, best.coeffs.to_json()).map_err(io_error)?;
    }
    let file: CoeffsFile = best.coeffs.clone().into();
    let body = match args.output.format {
        Format::Json => json_text(&json!({
            "n_photons": args.n,
            "hops": args.hops,
            "seed": args.seed,
            "p": best.p,
            "evaluations": best.evaluations,
            "weights": best.coeffs.weights(),
            "coeffs": file,
        })),
        Format::Csv => {
            let mut s = String::from("i,weight\n");
            for (i, w) in best.coeffs.weights().iter().enumerate() {
                s.push_str(&format!("{i},{}\n", format_sig12(*w)));
            }
            s
        }
    };
    emit(&args.output, &body, out)?;
    Ok(EXIT_OK)
}

/// Perturbs the last coefficient so that the closed-form side disagrees with
/// the simulation.
fn corrupt(coeffs: &ResourceCoeffs) -> Result<ResourceCoeffs> {
    let mut raw = coeffs.coeffs().to_vec();
    let last = raw.len() - 1;
    raw[last] = raw[last] * 1.5 + Complex64::new(0.1, 0.0);
    ResourceCoeffs::normalized(raw)
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Result<ResourceCoeffs> {
    let raw = (0..=n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ResourceCoeffs::normalized(raw)
}

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let fixed = if args.resource.is_set() {
        let c = args.resource.resolve()?;
        if let Some(n) = args.n {
            if n != c.n_photons() {
                return Err(Error::InvalidArgument(format!(
                    "--n {n} does not match the {}-photon resource",
                    c.n_photons()
                )));
            }
        }
        Some(c)
    } else {
        None
    };
    let n = match (&fixed, args.n) {
        (Some(c), _) => c.n_photons(),
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "certify needs --n or a resource flag".into(),
            ))
        }
    };
    if n > DEFAULT_MAX_PHOTONS {
        return Err(Error::SimulatorLimit {
            n,
            max: DEFAULT_MAX_PHOTONS,
        });
    }
    if args.cases == 0 {
        return Err(Error::InvalidArgument("--cases must be at least 1".into()));
    }

    let mut reports: Vec<CertificationReport> = Vec::new();
    match fixed {
        Some(c) => {
            let qubits: Vec<QubitState> = (0..args.cases)
                .map(|_| QubitState::random(&mut rng))
                .collect();
            let analytic = if args.inject_fault {
                corrupt(&c)?
            } else {
                c.clone()
            };
            reports.push(certify_against(&c, &analytic, &qubits, args.tol)?);
        }
        None => {
            for _ in 0..args.cases {
                let c = random_coeffs(&mut rng, n)?;
                let q = QubitState::random(&mut rng);
                let analytic = if args.inject_fault {
                    corrupt(&c)?
                } else {
                    c.clone()
                };
                reports.push(certify_against(&c, &analytic, &[q], args.tol)?);
            }
        }
    }

    let passed = reports.iter().all(|r| r.passed);
    let max_dp = reports
        .iter()
        .map(|r| r.max_probability_deviation)
        .fold(0.0, f64::max);
    let max_inf = reports.iter().map(|r| r.max_infidelity).fold(0.0, f64::max);
    let phase = reports.iter().map(|r| r.phase_mismatches).sum::<usize>();
    let failing_m: Vec<usize> = reports
        .iter()
        .filter(|r| !r.passed)
        .filter_map(|r| r.worst_m)
        .collect();
    let body = match args.output.format {
        Format::Json => json_text(&json!({
            "n_photons": n,
            "cases": args.cases,
            "tolerance": args.tol,
            "max_probability_deviation": max_dp,
            "max_infidelity": max_inf,
            "phase_mismatches": phase,
            "failing_m": failing_m,
            "passed": passed,
        })),
        Format::Csv => format!(
            "n_photons,cases,tolerance,max_probability_deviation,max_infidelity,phase_mismatches,passed\n{n},{},{},{},{},{phase},{passed}\n",
            args.cases,
            format_sig12(args.tol),
            format_sig12(max_dp),
            format_sig12(max_inf),
        ),
    };
    emit(&args.output, &body, out)?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn cmd_repro(out: &mut dyn Write) -> Result<i32> {
    let rows = regression_table()?;
    out.write_all(render_table(&rows).as_bytes())
        .map_err(io_error)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    writeln!(
        out,
        "{} of {} checks passed",
        rows.len() - failed,
        rows.len()
    )
    .map_err(io_error)?;
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
