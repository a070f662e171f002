use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not fit together.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension cap exceeded: {requested} > {cap}")]
    SizeLimit { requested: usize, cap: usize },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("circuit error at gates[{gate}]: {message}")]
    Circuit { gate: usize, message: String },

    /// The interior-point solver hit its iteration cap or stalled.
    #[error(
        "solver did not converge after {iterations} iterations \
         (primal {primal:.3e}, dual {dual:.3e}, residual {residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
