use std::fmt;

/// Errors reported by the sketching library.
#[derive(Debug)]
pub enum Error {
    /// A parameter is outside its documented domain (bad k, base, kernel, ...).
    InvalidParameter(String),
    /// Input data violates a precondition (duplicate ids, decreasing timestamps, ...).
    InvalidInput(String),
    /// The operation is not defined for this configuration.
    Unsupported(String),
    /// A snapshot could not be decoded.
    Corrupt(String),
    /// An internal invariant failed (e.g. a fixpoint iteration did not terminate).
    Internal(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported: {m}"),
            Error::Corrupt(m) => write!(f, "corrupt snapshot: {m}"),
            Error::Internal(m) => write!(f, "internal error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
