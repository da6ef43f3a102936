use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid register system: {0}")]
    InvalidRegister(String),
    #[error("register label collision: {0}")]
    LabelCollision(String),
    #[error("unknown register label: {0}")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("register order is not a permutation of the system labels")]
    NotAPermutation,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported field size {0}")]
    UnsupportedField(u64),
    #[error("set size {requested} exceeds the admissible cap {cap:.6}")]
    CapExceeded { requested: usize, cap: f64 },
    #[error("rate {requested} exceeds the admissible maximum {max_rate:.6}")]
    RateRefused { requested: f64, max_rate: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
