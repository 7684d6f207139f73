use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("eigenvalue separation must be positive, got {0:e}")]
    NoSeparation(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear objective has no unique maximizer (zero direction)")]
    ZeroDirection,

    #[error("point is off the action space (residual {0:e})")]
    OffSpace(f64),

    #[error("perturbation geometry degenerate: delta + 2 psi = {0} >= pi/2")]
    DegenerateGeometry(f64),

    #[error("not enough checkpoints: need {needed}, have {have}")]
    TooFewCheckpoints { needed: usize, have: usize },

    #[error("traces are not aligned on the same checkpoints")]
    MisalignedTraces,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
