use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("drift model requires {expected} sensors, got {actual}")]
    ModelSensorMismatch { expected: usize, actual: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("interval [{from}, {to}] is reversed or outside the simulated horizon")]
    BadInterval { from: f64, to: f64 },

    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),

    #[error("false-alarm target gamma must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("Monte Carlo budget exhausted: {context} (partial estimate {partial} after {replications} replications)")]
    BudgetExceeded {
        context: String,
        partial: f64,
        replications: usize,
    },

    #[error("linear system solve failed: {0}")]
    SolveFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
