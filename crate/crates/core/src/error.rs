use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction or compatibility problem.
    Grid(String),
    /// An argument outside the domain of an operation.
    Domain(String),
    /// A rearrangement was asked to act on a field with negative values.
    Negative(&'static str),
    /// A half-space whose reflection does not permute grid points.
    NotGridCompatible,
    /// An integrand, coupling or kernel evaluated to NaN or infinity.
    NonFinite(String),
    /// Inconsistent configuration (missing derivatives, empty families...).
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Grid(msg) | Error::Domain(msg) | Error::NonFinite(msg) => f.write_str(msg),
            Error::Negative(msg) => f.write_str(msg),
            Error::NotGridCompatible => f.write_str("reflection not grid-compatible"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
