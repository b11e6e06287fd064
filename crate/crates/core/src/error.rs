use thiserror::Error;

/// Errors produced by the numerical routines and the sweep driver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The series diverges for the requested parameters (e.g. eps <= 0).
    #[error("divergent series: {0}")]
    Divergent(String),

    /// The requested tolerance cannot be certified within the configured budget.
    #[error("unachievable tolerance: requested {requested:e}, best certified bound {best:e} with {terms} terms")]
    UnachievableTolerance { requested: f64, best: f64, terms: u64 },

    /// A computation would exceed a configured resource ceiling.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Malformed user input (distribution specs, grids, configuration).
    #[error("invalid input: {0}")]
    Input(String),

    /// An iterative method did not converge.
    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
