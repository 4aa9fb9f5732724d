//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("out of contract: {0}")]
    OutOfContract(String),

    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors raised by a numerical solver rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::ConvergenceFailure(_))
    }
}
