//! Multi-hop linear-optical (KLM-style) teleportation with arbitrary
//! entangled resources.
//!
//! - [`fock`]: exact sparse Fock-space algebra (creation operators, the
//!   multimode Fourier transform, photon counting).
//! - [`resource`]: resource coefficient families.
//! - [`teleport`]: closed-form single-hop outcome statistics and Kraus correction.
//! - [`chain`]: per-hop versus deferred correction over `M` hops.
//! - [`optimize`]: sweeps and searches over resource coefficients.
//! - [`oracle`]: full circuit simulation used to certify the closed forms.
//! - [`repro`]: regression table of the headline numbers.
//! - [`cli`]: the command-line front end used by the `klm-teleport` binary.

pub mod chain;
pub mod cli;
pub mod error;
pub mod fock;
pub mod optimize;
pub mod oracle;
pub mod repro;
pub mod resource;
pub mod teleport;

pub use error::{Error, Result};
