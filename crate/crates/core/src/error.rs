use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument lies outside the domain of the operation.
    Domain { name: &'static str, value: f64 },
    /// The absolute moment of order `q` does not exist for tail parameter `nu`.
    MomentUndefined { q: f64, nu: f64 },
    InsufficientData { needed: usize, got: usize },
    /// The input has no spread (zero variance, all-equal magnitudes, ...).
    Degenerate(&'static str),
    EmptyBin { bin: usize, count: usize, needed: usize },
    NonPositivePrice { index: usize, value: f64 },
    /// The operation has no closed form for the given configuration.
    Unsupported(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { name, value } => write!(f, "{name} = {value} is outside its domain"),
            Error::MomentUndefined { q, nu } => {
                write!(f, "absolute moment of order {q} is infinite for nu = {nu}")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Error::EmptyBin { bin, count, needed } => {
                write!(f, "conditioning bin {bin} holds {count} pairs, need {needed}")
            }
            Error::NonPositivePrice { index, value } => {
                write!(f, "price at index {index} is {value}, prices must be positive")
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(name: &'static str, value: f64) -> Error {
    Error::Domain { name, value }
}
