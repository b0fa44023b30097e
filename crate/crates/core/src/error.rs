use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("Fourier order {order} does not match {targets} target modes")]
    OrderMismatch { order: usize, targets: usize },

    #[error("Fourier target mode {0} listed more than once")]
    DuplicateTarget(usize),

    #[error("measured mode {0} listed more than once")]
    DuplicateMeasuredMode(usize),

    #[error("no modes to measure")]
    EmptyMeasurement,

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    Unnormalized { norm_sqr: f64 },

    #[error("resource needs at least one photon (got {0})")]
    TooFewPhotons(usize),

    #[error("expected {expected} coefficients, found {found}")]
    CoefficientCount { expected: usize, found: usize },

    #[error("coefficients not normalized: sum |c_i|^2 - 1 = {delta:e}")]
    CoefficientNormalization { delta: f64 },

    #[error("tent slope x = {0} outside [-1/12, 1/9]")]
    TentRange(f64),

    #[error("qubit not normalized: |alpha|^2 + |beta|^2 = {0}")]
    QubitNormalization(f64),

    #[error("outcome m = {m} outside the correctable range 1..={n}")]
    NotCorrectable { m: usize, n: usize },

    #[error("outcome m = {m} has zero probability")]
    ZeroProbability { m: usize },

    #[error("hop {hop} destroyed the qubit (m = {m})")]
    Destroyed { hop: usize, m: usize },

    #[error("chain has {hops} hops but {outcomes} outcomes were given")]
    OutcomeCount { hops: usize, outcomes: usize },

    #[error("chain needs at least one hop")]
    EmptyChain,

    #[error("hop {hop} uses {found} photons, expected {expected}")]
    MixedPhotonNumbers {
        hop: usize,
        expected: usize,
        found: usize,
    },

    #[error("outcome lattice has {terms} terms, above the budget of {budget}; use the Monte Carlo sampler")]
    BudgetExceeded { terms: u128, budget: u128 },

    #[error("sweep range [{from}, {to}] invalid")]
    SweepRange { from: f64, to: f64 },

    #[error("sweep needs at least 2 steps (got {0})")]
    SweepSteps(usize),

    #[error("simulator supports N <= {max}, got N = {n}")]
    SimulatorLimit { n: usize, max: usize },

    #[error("post-measurement register does not have the expected structure: {0}")]
    NonconformingResidual(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
