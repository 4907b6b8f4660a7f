use thiserror::Error;

/// Errors surfaced by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A hypothesis required by the requested computation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Numerical configuration (grid, horizon, memory) is inadequate.
    #[error("configuration error: {0}")]
    Config(String),
    /// Adaptive quadrature stopped before reaching its tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}, requested {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },
    /// An iterative method (series, root finder, sampler loop) hit its cap.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// Requested feature is deliberately unsupported.
    #[error("not supported: {0}")]
    Unsupported(String),
    /// Parse failure for user-facing specifications.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
