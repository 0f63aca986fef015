use thiserror::Error;

/// Errors produced by the simulator and the fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An apparatus or pump configuration violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),
    /// A least-squares fit failed to converge or produced an unphysical result.
    #[error("fit failed after {iterations} iterations: {reason}")]
    Fit { reason: String, iterations: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
