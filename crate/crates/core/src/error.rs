use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a type invariant (bad probabilities, non-finite values, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A maximum-entropy bound lies below the entropy it should bound.
    #[error("constraint error: bound {bound} is below entropy {entropy}")]
    Constraint { bound: f64, entropy: f64 },

    #[error("mean energy {target} is not reachable; it must lie in the open interval ({lo}, {hi})")]
    UnreachableMean { target: f64, lo: f64, hi: f64 },

    #[error("unsupported lattice side {0}; expected 2^a * 3^b")]
    UnsupportedSide(usize),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("no lattice offset has length in [{lo}, {hi})")]
    EmptySeparation { lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerics error: {0}")]
    Numerics(String),

    #[error("operator is not diagonal in the working basis (off-diagonal mass {0:e})")]
    NotDiagonal(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
