use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid count vector: {0}")]
    InvalidCounts(String),

    #[error("symbol {symbol} would get zero probability")]
    ZeroProbability { symbol: usize },

    #[error("quantizer cannot reach sum {target}: no modifiable coordinate")]
    Unadjustable { target: u64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid spread: {0}")]
    InvalidSpread(String),

    #[error("verification mismatch: {0}")]
    VerificationMismatch(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(
        "reducible chain: {closed_classes} closed classes, stationary distribution is not unique"
    )]
    ReducibleChain { closed_classes: usize },

    #[error("power iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
}
