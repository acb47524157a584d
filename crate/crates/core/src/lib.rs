//! Simulation and analysis of two-arm Bell-type experiments.
//!
//! The crate follows the data through the same stages a laboratory analysis
//! would:
//!
//! 1. [`models`] generates per-arm event streams (`ArmRecord`s) from a local
//!    hidden-variable model or from an arbitrary no-signaling box, optionally
//!    degraded by a detector model.
//! 2. [`coincidence`] pairs events across arms whose timestamps agree within a
//!    window, producing a [`PairSet`](events::PairSet).
//! 3. [`statistics`] tabulates the pairs into the contextual distribution
//!    `p(A, a, B, b)`, splits it into per-setting conditional tables, checks
//!    no-signaling and computes CHSH correlators.
//! 4. [`feasibility`] decides whether a single noncontextual joint
//!    distribution over all outcomes has the conditional tables as its
//!    pairwise marginals, and returns either a certificate or a Bell-type
//!    witness.

pub mod coincidence;
mod dims;
mod error;
pub mod events;
pub mod feasibility;
pub mod models;
pub mod rng;
mod simplex;
pub mod statistics;

pub use dims::Dims;
pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
