//! Error type shared across the crate.
//!
//! Failure messages are part of the library contract: callers match on the
//! variant, and the rendered strings are stable.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A coefficient was requested at an exponent outside a series window,
    /// or an operation would need coefficients that the window declares
    /// untracked.
    #[error("untracked exponent: {0}")]
    UntrackedExponent(String),

    /// A region-restricted numeric expansion was evaluated at a point outside
    /// its convergence region.
    #[error("wrong region for this expansion: {0}")]
    WrongRegion(String),

    /// Closed-form evaluation at a pole of the target function.
    #[error("pole: {0}")]
    Pole(String),

    /// Attempt to represent zero as a logarithm-carrying point.
    #[error("zero has no logarithm")]
    ZeroLog,

    /// Leading-exponent extraction failed to converge at every candidate
    /// lattice point.
    #[error("not expandable over lattice: {0}")]
    NotExpandable(String),

    /// Mod-1 exponent clustering produced more classes than the configured cap.
    #[error("support not finite at this cutoff: {0}")]
    SupportNotFinite(String),

    /// Least-squares design matrix condition number exceeded the reliability
    /// threshold.
    #[error("fit unreliable: {0}")]
    FitUnreliable(String),

    /// A functional was asked for evaluations beyond its truncation level.
    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),

    /// Product-correlator evaluation outside |z1| > |z2| > 0.
    #[error("outside product region: {0}")]
    OutsideProductRegion(String),

    /// Iterate-correlator evaluation outside |z2| > |z0| > 0.
    #[error("outside iterate region: {0}")]
    OutsideIterateRegion(String),

    /// A partial sum whose tail had not started decaying at the cutoff.
    #[error("convergence not established at L={0}")]
    ConvergenceNotEstablished(usize),

    /// Two series with different variable alphabets were combined.
    #[error("variable alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// Malformed input not covered by a more specific variant.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
