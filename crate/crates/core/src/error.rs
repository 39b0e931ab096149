use thiserror::Error;

/// Errors produced anywhere in the compression pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("instance too large for exhaustive evaluation: {what} = {size} exceeds {limit}")]
    Capacity { what: &'static str, size: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("corrupt stream: {0}")]
    Corrupt(String),

    #[error("truncated stream: needed {needed} more bytes, {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("pointer {pointer} out of range at position {position}")]
    PointerOutOfRange { pointer: i64, position: usize },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported container version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u8, supported: u8 },

    #[error("framing error: {0}")]
    Framing(String),

    #[error("unknown codec id {0}")]
    UnknownCodec(u8),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
