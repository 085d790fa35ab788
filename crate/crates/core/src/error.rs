//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the linear algebra kernels, the Arnoldi driver and the
/// experiment front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular: {0}")]
    SingularMatrix(String),

    #[error(
        "matrix exponential overflow: scaled norm still {norm:.3e} after {squarings} squarings"
    )]
    Overflow { norm: f64, squarings: usize },

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("matrix is not Hermitian: max asymmetry {asym:.3e} exceeds {tol:.3e}")]
    NotHermitian { asym: f64, tol: f64 },

    #[error("shifted matrix I - delta*L is numerically singular for delta = {0}")]
    SingularShift(f64),

    #[error("operator not supported: {0}")]
    NotSupported(String),

    #[error("starting vector has norm below 1e-300")]
    ZeroVector,

    #[error("Krylov space already spans the full dimension {0}")]
    AtFullDimension(usize),

    #[error("projected Hessenberg matrix is numerically singular (operator not sectorial?)")]
    SingularHessenberg,

    #[error("stopping tolerance not met within {max_m} iterations")]
    MaxIterations {
        max_m: usize,
        /// Best iterate reached, with its full diagnostic history.
        best: Box<crate::phifun::PhiApproximation>,
    },

    #[error("sector semiangle {0} out of range for this bound (requires theta < {1})")]
    ThetaOutOfRange(f64, f64),

    #[error(
        "field of values is not contained in the open left half-plane (point {0} has Re >= 0)"
    )]
    NotSectorial(num_complex::Complex64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("calibration failed: tolerance not reached for any m <= {0}")]
    CalibrationFailed(usize),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
