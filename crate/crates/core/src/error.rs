//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation angle {0} deg outside [-15, 15]")]
    AngleOutOfRange(i32),

    #[error("rotation axis must be one of the canonical unit vectors x, y, z")]
    NonCanonicalAxis,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated payload")]
    Truncated,

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("flat parameter array has length {found}, expected {expected}")]
    FlatLengthMismatch { expected: usize, found: usize },

    #[error("batch size {batch} exceeds dataset size {len}")]
    BatchTooLarge { batch: usize, len: usize },

    #[error("observer {observer}: timestamp {t} ms is not after {last} ms")]
    OutOfOrderTimestamp { observer: String, t: u64, last: u64 },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("client {client} failed in round {round}: {reason}")]
    ClientFailure {
        client: usize,
        round: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
