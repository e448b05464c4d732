use thiserror::Error;

/// Errors raised by problem construction, the prox machinery and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested combination of feasible set, composite term and scaling
    /// has no exact subproblem solver.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("{which} line search exhausted {max_backtracks} backtracks at iteration {iteration}")]
    LineSearch {
        which: &'static str,
        iteration: usize,
        max_backtracks: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
