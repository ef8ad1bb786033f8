use thiserror::Error;

/// Errors produced by the library.
///
/// Non-convergence of a series is never an error: it is reported through the
/// `converged` / `trusted` flags of the result types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter pair (p = {p}, q = {q}): {reason}")]
    InvalidPair { p: f64, q: f64, reason: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("function cannot be evaluated at t = {t}: {reason}")]
    Evaluation { t: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
