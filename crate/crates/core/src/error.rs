use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is not a supported prime (2..=251)")]
    NotPrime(u32),
    #[error("value {value} out of range (limit {limit})")]
    OutOfRange { value: usize, limit: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),
    #[error("decoding inconsistency at time {time}: all metrics vanished")]
    Inconsistent { time: usize },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("enumeration budget exceeded: {size} > {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
