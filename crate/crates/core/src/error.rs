//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario file failed to parse.
    #[error("scenario parse error: {0}")]
    Parse(String),

    /// A scenario, map, or parameter set violated one of its invariants.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A lookup used an id that does not exist.
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u32 },

    /// A request that is malformed beyond id problems (bad shapes, ranges).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A replay log could not be read or was malformed.
    #[error("replay log error: {0}")]
    Replay(String),

    /// Training aborted (empty dataset, non-finite loss).
    #[error("training error: {0}")]
    Training(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn unknown(kind: &'static str, id: u32) -> Self {
        Error::UnknownId { kind, id }
    }
}
