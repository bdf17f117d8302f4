//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied data: malformed model, point outside the domain,
    /// arity mismatch, empty dataset.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well-formed but outside this implementation's
    /// supported envelope (enumeration cap, quadrature dimension cap,
    /// improper Gaussian volume).
    #[error("capability limit: {0}")]
    Capability(String),

    /// The metric could not be inverted reliably.
    #[error("ill-conditioned metric: condition estimate {estimate:.3e}")]
    IllConditioned { estimate: f64 },

    /// A numerical procedure failed its own sanity checks.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
