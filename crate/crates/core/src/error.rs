use alloc::boxed::Box;
use alloc::string::String;
use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("hypergeometric parameter {0} is a non-positive integer (Pochhammer pole)")]
    PochhammerPole(Complex64),

    #[error("hypergeometric series did not converge within {0} terms")]
    NoConvergence(usize),

    #[error("truncation inadequate: {0}")]
    Truncation(String),

    #[error("norm drifted by {drift:.3e} in one step at t = {time}; reduce dt or enlarge the basis")]
    NormDrift { time: f64, drift: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("linear system is singular or ill-conditioned")]
    Singular,

    #[error("operation requires two stable branches but the parameters are monostable")]
    Monostable,

    #[error("trajectory {index} (seed {seed:#018x}) failed: {source}")]
    Trajectory {
        index: usize,
        seed: u64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
