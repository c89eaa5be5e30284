use thiserror::Error;

/// Errors raised by samplers, streams, collectors and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight {weight} at index {index} is negative or not finite")]
    InvalidWeight { index: u64, weight: f64 },

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    Normalization { sum: f64, tolerance: f64 },

    #[error("declared total {0} must be positive and finite")]
    InvalidTotal(f64),

    #[error("probability {0} is outside the clamp range")]
    ProbabilityOutOfRange(f64),

    #[error("beta shape must be at least 1")]
    ZeroShape,

    #[error("uniform {0} is outside [0, 1)")]
    UniformOutOfRange(f64),

    #[error("stream exhausted with {remaining} samples left and mass deficit {deficit:e}")]
    StreamUnderflow { remaining: u64, deficit: f64 },

    #[error("scripted uniform source exhausted after {draws} draws")]
    ScriptExhausted { draws: u64 },

    #[error("index {index} out of bounds for population of size {n}")]
    IndexOutOfBounds { index: u64, n: u64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pmf at the mode must be positive, got {0}")]
    NonPositiveMode(f64),

    #[error("population must contain at least one element")]
    EmptyPopulation,

    #[error("expected count {0} must be positive after pooling")]
    NonPositiveExpected(f64),

    #[error("outcome space of {outcomes} count vectors exceeds the exact-mode limit {limit}; use marginal mode")]
    OutcomeSpaceTooLarge { outcomes: u128, limit: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
