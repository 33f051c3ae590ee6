use thiserror::Error;

use crate::assign::AssignReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch at {location}: expected {expected}, found {found}")]
    DimensionMismatch {
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate key {key:?} at {location}")]
    DuplicateKey { key: String, location: String },

    #[error("non-finite value at {location}")]
    NonFiniteValue { location: String },

    #[error("malformed input at {location}: {reason}")]
    Malformed { location: String, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt index file: {0}")]
    Corrupt(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("token {token} out of range at level {level} (size {size})")]
    TokenOutOfRange {
        level: usize,
        token: u32,
        size: usize,
    },

    #[error("invalid id: {0}")]
    InvalidId(String),

    #[error("capacity exceeded: {n} embeddings > {capacity} distinct ids")]
    CapacityExceeded { n: u128, capacity: u128 },

    #[error("all candidates exhausted for key {key:?}")]
    ExhaustedCandidates {
        key: String,
        report: Box<AssignReport>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapacityExceeded { .. } | Error::ExhaustedCandidates { .. } => 3,
            Error::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}
