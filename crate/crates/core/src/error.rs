use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("capacity violation: job {job} on server {server}")]
    CapacityViolation { job: usize, server: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("capacity too small: {0}")]
    CapacityTooSmall(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("negative availability: job {job} on server {server}")]
    NegativeAvailability { job: usize, server: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
