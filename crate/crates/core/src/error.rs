//! Shared error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("quadrature did not converge: last change {change:.3e} above tolerance {tol:.3e}")]
    QuadratureNonConvergence { change: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inner subproblem failed: {0}")]
    Subproblem(String),

    #[error("PCRB threshold {threshold:.6e} rad^2 is below the achievable floor {floor:.6e} rad^2")]
    InfeasibleThreshold { threshold: f64, floor: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
