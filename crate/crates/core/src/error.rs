use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A map derivative vanished where its logarithm was required.
    #[error("singular derivative at {at}: |f'| = {value:e}")]
    SingularDerivative { at: String, value: f64 },

    /// A requested operation is not defined for the given map family or space.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An enumeration or allocation guard was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A statistical fit could not be formed from the data.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A malformed experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
