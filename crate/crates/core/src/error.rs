use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HazardError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Model or generator validation failed.
    #[error("validation error: {0}")]
    Validation(String),

    /// Adaptive quadrature did not reach its tolerance.
    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// The survival kernel fell below the floor on a set of positive measure.
    #[error("singular kernel: f <= floor on [{from}, {to}]")]
    SingularKernel { from: f64, to: f64 },

    /// Malformed or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HazardError {
    fn from(e: std::io::Error) -> Self {
        HazardError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HazardError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(HazardError::Domain(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(HazardError::Contract(msg.into()))
}
