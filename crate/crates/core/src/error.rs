use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid observation matrix: {0}")]
    InvalidObservation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("product index {index} out of range for {n_products} products")]
    ProductOutOfRange { index: usize, n_products: usize },

    #[error("observed value is undefined with zero observations per product")]
    NoObservations,

    #[error("observation space has {size} matrices, above the enumeration cap of {cap}")]
    EnumerationCapExceeded { size: u128, cap: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("best product is not unique (value gap is zero)")]
    NonUniqueBest,

    #[error("only {available} products have at least {m} ratings, {requested} requested")]
    InsufficientProducts {
        available: usize,
        requested: usize,
        m: usize,
    },

    #[error("{}", match .line { Some(l) => format!("line {l}: {msg}"), None => msg.clone() })]
    Data { line: Option<u64>, msg: String },

    #[error(
        "quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}"
    )]
    QuadratureNonConvergence { error: f64, tolerance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(line: impl Into<Option<u64>>, msg: impl Into<String>) -> Self {
        Error::Data {
            line: line.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
