use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("exponent at offset {offset} must be an integer literal with magnitude <= 16")]
    BadExponent { offset: usize },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("every restart diverged")]
    AllDiverged,
    #[error("ode reference: {0}")]
    Ode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
