/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration that the model deliberately does not support.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// A numerical procedure failed; the message carries diagnostics.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
