use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, scale {scale:.3e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Eval(_)
            | Error::InvalidGrid(_)
            | Error::InvalidParameter(_)
            | Error::Config(_) => 2,
            Error::NoConvergence { .. } | Error::NotHermitian { .. } => 3,
            Error::DimensionMismatch { .. } | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
