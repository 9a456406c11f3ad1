use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("not strictly positive (min eigenvalue {0:e})")]
    Singular(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("Kraus operators are not complete (residual {0:e})")]
    NotComplete(f64),

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("group representation is not closed under products (residual {0:e})")]
    NotClosed(f64),

    #[error("group representation does not contain the identity")]
    MissingIdentity,

    #[error("map is not idempotent (residual {0:e})")]
    NotIdempotent(f64),

    #[error("commutant has dimension {0}, cannot sample free operations")]
    CommutantTooSmall(usize),

    #[error("could not draw an invertible normalizer after {0} attempts")]
    SamplingFailed(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
