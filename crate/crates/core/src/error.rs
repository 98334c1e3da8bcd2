use thiserror::Error;

use crate::discretization::SolveError;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("trapping condition violated: {0}")]
    TrappingViolation(#[from] crate::energy::TrappingViolation),

    #[error("singular projection: (u, R_X(u)) = {0:e} is not positive")]
    SingularProjection(f64),

    #[error("retraction of a vanishing vector (norm {0:e})")]
    DegenerateRetraction(f64),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed state file: {0}")]
    StateFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
