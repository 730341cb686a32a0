//! Crate-wide error type.

/// Errors raised by game, privacy, and verifier operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input shapes do not line up (profile length, action counts, signal counts).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A probability vector fails nonnegativity or normalization.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Scalar parameter out of its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An enumeration guard (state-space or signal-space size) was exceeded.
    #[error("guard violated: {0}")]
    GuardViolation(String),

    /// Operation received the wrong monitoring kind (public vs private).
    #[error("incompatible monitoring: {0}")]
    IncompatibleMonitoring(String),

    /// Required optional data (ex-post payoffs, tensor representation) absent.
    #[error("missing data: {0}")]
    MissingData(String),

    /// Conditioning on an event of zero probability.
    #[error("zero-probability conditioning: {0}")]
    ZeroProbability(String),

    /// Linear solve or other numeric routine failed its residual contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed input document.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
