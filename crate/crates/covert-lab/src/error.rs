//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulation, analysis, and harness operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("packet stream is empty")]
    EmptyStream,

    #[error("packet stream violates ordering at index {index}: {detail}")]
    UnorderedStream { index: usize, detail: String },

    #[error("stream too short: {0}")]
    StreamTooShort(String),

    #[error("stream does not match plan: {0}")]
    PlanMismatch(String),

    #[error("quadrature failed to converge: error estimate {error:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { error: f64, tolerance: f64 },

    #[error("quadrature produced an invalid value: {0}")]
    QuadratureFailure(String),

    #[error("trial {index} failed: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {detail}")]
    TraceParse {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the Monte Carlo trial index it occurred in.
    pub fn in_trial(self, index: usize) -> Error {
        Error::Trial {
            index,
            source: Box::new(self),
        }
    }
}
