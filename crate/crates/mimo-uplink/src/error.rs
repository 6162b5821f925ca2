//! Error type shared across the crate.

/// Errors produced by configuration validation, numerical routines, and the
/// configuration-space enumerator.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Invalid parameters, dimensions, or scenario specification.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical routine failed to converge or a factorization broke down.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A request exceeds a hard capacity limit.
    #[error("capacity error: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
