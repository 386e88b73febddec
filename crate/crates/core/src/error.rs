use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] EvalError),
    #[error("objects live on different grids")]
    GridMismatch,
    #[error("delta order {order} exceeds the cap {cap}")]
    DeltaOrderOverflow { order: usize, cap: usize },
    #[error("singular pivot at node {node}")]
    Singular { node: usize },
    #[error("condition estimate {cond:.3e} exceeds the cap {cap:.3e}")]
    IllConditioned { cond: f64, cap: f64 },
    #[error("breakdown at β_{index}")]
    Breakdown { index: usize },
    #[error("annihilation residual {residual:.3e} exceeds {tol:.3e}")]
    Annihilation { residual: f64, tol: f64 },
    #[error("Wronskian is numerically singular at every node")]
    Wronskian,
    #[error("{0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::IllConditioned { .. }
                | Error::Breakdown { .. }
                | Error::Annihilation { .. }
                | Error::Wronskian
                | Error::DeltaOrderOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
