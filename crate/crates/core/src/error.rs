//! Error type shared by all modules of the crate.

use std::fmt;

/// Crate-wide error.
///
/// `Domain` marks inputs outside an operation's contract (bad degrees,
/// vectors outside a cone, negative densities). `Numerical` marks a
/// computation that started from valid inputs but could not be completed
/// (lost admissibility, stalled iteration). `Io` wraps file problems.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Domain(String),
    Numerical(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand constructor for `Error::Domain`.
pub fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Shorthand constructor for `Error::Numerical`.
pub fn numerical_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numerical(msg.into()))
}
