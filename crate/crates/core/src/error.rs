use thiserror::Error;

/// Errors surfaced by the estimation toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter fails its domain check (non-positive rate, point outside
    /// the window, malformed configuration field, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested table or grid would exceed a supported size.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The operation is valid but not implemented for this parameter branch.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A statistic is undefined for the given sample (e.g. relative variance
    /// of an all-zero sample).
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
