use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested combination of model and operation is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A root or split point could not be bracketed.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// An iterative routine failed to reach its tolerance. The best estimate is kept.
    #[error("accuracy error: {message} (estimate {estimate:e}, achieved tolerance {achieved:e})")]
    Accuracy {
        message: String,
        estimate: f64,
        achieved: f64,
    },

    /// A rejection-sampling envelope was exceeded by an observed proposal.
    #[error("envelope violated: {0}")]
    Envelope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite, got {v}")))
    }
}
