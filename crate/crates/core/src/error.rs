use alloc::string::String;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure cannot reach the requested accuracy on the given
    /// input (for example a delay grid too coarse for the jitter kernel).
    #[error("precision error: {0}")]
    Precision(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::Precision(msg.into())
    }
}

/// Convenience alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;
