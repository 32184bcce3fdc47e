use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("unknown catalog entry `{name}`; valid names: {valid}")]
    UnknownCatalog { name: String, valid: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("operator is not elliptic: {0}")]
    NotElliptic(String),
    #[error("trivial spectral pair")]
    TrivialPair,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
