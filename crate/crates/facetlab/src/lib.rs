//! Exact desk-scale laboratory for random ±1 polytopes.
//!
//! The crate has five subsystems:
//!
//! - [`entropy`]: the scalar entropy-type functions `f`, `h`, `psi`, the
//!   gaussian tail envelopes `m1`/`m2`, and the fixed constants they pin down.
//! - [`tilted`]: exponentially tilted moments, Berry–Esseen gap bounds, and
//!   the two-sided probability estimates for tangent-halfspace events.
//! - [`prob`]: ground-truth probabilities for halfspace events over uniform
//!   sign vectors — exact Gray-code enumeration, Monte Carlo, classical
//!   lower bounds, and one-sided depth certificates.
//! - [`hull`]: sampling of random ±1 polytopes and exact integer facet
//!   enumeration (incremental hull cross-checked by a brute-force oracle).
//! - [`sandwich`]: the entropy level-set geometry (boundary-point map,
//!   Weingarten/curvature audit) and the sandwich/coverage/facet-growth
//!   experiments.
//!
//! [`suites`] packages the inequality fuzz suites into CSV-producing runs
//! consumed by the CLI and the acceptance tests.

pub mod entropy;
pub mod exact;
pub mod hull;
pub mod prob;
pub mod rng;
pub mod sandwich;
pub mod suites;
pub mod tilted;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated hypothesis/precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Degenerate input (e.g. sigma = 0) for which the operation is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A configured enumeration/combinatorial cap was exceeded.
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    /// Parameter outside its allowed range.
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
