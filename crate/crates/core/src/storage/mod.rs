//! Bounded dialogue context and the record types that back session history.
//!
//! [`DialogueBuffer`] keeps the last α characters (Unicode scalar values) of
//! the conversation. Text pushed out of the front is returned as tagged
//! [`Fragment`]s, which [`chunk_fragments`] groups into checksummed chunk
//! files. Writing those files is the job of a store outside this crate.

mod buffer;
mod chunk;
mod records;

use alloc::string::String;

use thiserror::Error;

pub use buffer::{DialogueBuffer, Fragment, DEFAULT_CAPACITY, OVERSIZE_FACTOR};
pub use chunk::{
    chunk_fragments, decode_chunk_file, decode_payload, encode_chunk_file, encode_payload, Chunk,
    CHUNK_HEADER_LEN, CHUNK_MAGIC, MAX_CHUNK_TEXT_BYTES,
};
pub use records::{
    emotion_trajectory, ActionPlan, PlanStatus, PlanStep, Role, TrajectoryPoint, TurnRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("append of {len} characters exceeds the limit of {limit}")]
    OversizeAppend { len: usize, limit: usize },
    #[error("buffer capacity must be positive")]
    ZeroCapacity,
    #[error("invalid buffer snapshot: {0}")]
    InvalidSnapshot(String),
    #[error("chunk {seq} is missing")]
    ChunkMissing { seq: u64 },
    #[error("chunk {seq} failed its checksum")]
    ChecksumMismatch { seq: u64 },
    #[error("chunk {seq} is malformed: {reason}")]
    MalformedChunk { seq: u64, reason: String },
    #[error("invalid turn record: {0}")]
    InvalidRecord(String),
    #[error("invalid action plan: {0}")]
    InvalidPlan(String),
}
