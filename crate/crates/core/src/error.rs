use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max |A_jk - A_kj| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix dimension {n} exceeds the dense eigensolver cap of {cap}")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("grid regions {first} and {second} produce the same rescaled abscissa {abscissa}")]
    DuplicateAbscissa {
        first: usize,
        second: usize,
        abscissa: f64,
    },

    #[error(
        "degree {degree} exceeds grid resolving power ({points} constraint points); refine the grid or lower the degree"
    )]
    Unresolved { degree: usize, points: usize },

    #[error("state is an eigenstate (variance {variance:e}); bound undefined")]
    ZeroVariance { variance: f64 },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by malformed or inconsistent user input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::NotSymmetric { .. }
                | Error::NotNormalized { .. }
                | Error::InvalidInput(_)
                | Error::OracleCapExceeded { .. }
                | Error::DuplicateAbscissa { .. }
        )
    }
}
