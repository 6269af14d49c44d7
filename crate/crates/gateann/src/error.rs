use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("element type mismatch")]
    DtypeMismatch,

    #[error("predicate and metadata kinds are incompatible")]
    KindMismatch,

    #[error("node id {0} out of range (count = {1})")]
    NodeOutOfRange(u32, u64),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("inconsistent index components: {0}")]
    Inconsistent(String),

    #[error("storage backend is closed")]
    BackendClosed,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
