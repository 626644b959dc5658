use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension {dim} is not supported (direction numbers available up to {max})")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("integrand returned a non-finite value at {point:?}")]
    NonFiniteIntegrand { point: Vec<f64> },

    #[error("quadrature did not converge after {refinements} refinements (estimate {estimate}, error bound {error_bound})")]
    NoConvergence {
        refinements: usize,
        estimate: f64,
        error_bound: f64,
    },

    #[error("thresholds leave the simplex: gamma * sum = {0} >= 1")]
    SimplexViolation(f64),

    #[error("a threshold of zero makes the density singular")]
    Singular,

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error("hypergeometric evaluation failed: {0}")]
    Hypergeometric(String),

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
