use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two piecewise functions were combined over different domains.
    #[error("domain mismatch: [{0}, {1}) vs [{2}, {3})")]
    DomainMismatch(f64, f64, f64, f64),

    #[error("objective is unbounded below in alpha")]
    Unbounded,

    /// A truncation region carries no Gaussian mass.
    #[error("truncation region has no probability mass")]
    EmptyRegion,

    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The computed conditioning set contradicts the fitted model.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    /// True for errors caused by bad caller input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Self::InvalidInput(_) | Self::DomainMismatch(..))
    }
}
