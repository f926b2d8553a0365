use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or input violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file did not match its declared binary or text layout.
    #[error("format error: {0}")]
    Format(String),

    /// ARPA parse failure, with the 1-based line it occurred on.
    #[error("arpa parse error at line {line}: {msg}")]
    Arpa { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => Error::Io(io),
            other => Error::Format(format!("wav: {other}")),
        }
    }
}
