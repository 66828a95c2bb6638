use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Fragment, StorageError};

pub const CHUNK_MAGIC: [u8; 4] = *b"ISCH";

/// Magic plus a big-endian CRC-32 of the payload.
pub const CHUNK_HEADER_LEN: usize = 8;

/// Upper bound on the text bytes carried by one chunk.
pub const MAX_CHUNK_TEXT_BYTES: usize = 4096;

/// A sequence-numbered group of evicted fragments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub seq: u64,
    pub fragments: Vec<Fragment>,
}

impl Chunk {
    pub fn text(&self) -> String {
        self.fragments.iter().map(|f| f.text.as_str()).collect()
    }

    pub fn text_bytes(&self) -> usize {
        self.fragments.iter().map(|f| f.text.len()).sum()
    }
}

/// Groups fragments into chunks of at most `max_text_bytes` text bytes,
/// numbered from `first_seq`. Fragments are split where needed, always on a
/// character boundary; neighbouring pieces from the same turn are merged.
pub fn chunk_fragments(fragments: &[Fragment], first_seq: u64, max_text_bytes: usize) -> Vec<Chunk> {
    assert!(max_text_bytes >= 4, "a chunk must fit any single character");
    let mut chunks = Vec::new();
    let mut current: Vec<Fragment> = Vec::new();
    let mut used = 0usize;

    for fragment in fragments {
        let mut rest = fragment.text.as_str();
        while !rest.is_empty() {
            let room = max_text_bytes - used;
            let mut take = rest.len().min(room);
            while !rest.is_char_boundary(take) {
                take -= 1;
            }
            if take == 0 {
                chunks.push(Chunk {
                    seq: first_seq + chunks.len() as u64,
                    fragments: core::mem::take(&mut current),
                });
                used = 0;
                continue;
            }
            let (piece, tail) = rest.split_at(take);
            match current.last_mut() {
                Some(last) if last.turn_index == fragment.turn_index => last.text.push_str(piece),
                _ => current.push(Fragment {
                    turn_index: fragment.turn_index,
                    text: String::from(piece),
                }),
            }
            used += take;
            rest = tail;
            if used == max_text_bytes {
                chunks.push(Chunk {
                    seq: first_seq + chunks.len() as u64,
                    fragments: core::mem::take(&mut current),
                });
                used = 0;
            }
        }
    }
    if !current.is_empty() {
        chunks.push(Chunk {
            seq: first_seq + chunks.len() as u64,
            fragments: current,
        });
    }
    chunks
}

/// Payload layout, repeated per fragment: turn index (u64 BE), text length
/// in bytes (u32 BE), UTF-8 text.
pub fn encode_payload(fragments: &[Fragment]) -> Vec<u8> {
    let mut out = Vec::new();
    for f in fragments {
        out.extend_from_slice(&f.turn_index.to_be_bytes());
        out.extend_from_slice(&(f.text.len() as u32).to_be_bytes());
        out.extend_from_slice(f.text.as_bytes());
    }
    out
}

pub fn decode_payload(seq: u64, mut bytes: &[u8]) -> Result<Vec<Fragment>, StorageError> {
    let malformed = |reason: String| StorageError::MalformedChunk { seq, reason };
    let mut fragments = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 12 {
            return Err(malformed(format!("truncated fragment header ({} bytes)", bytes.len())));
        }
        let turn_index = u64::from_be_bytes(bytes[..8].try_into().expect("8 bytes"));
        let len = u32::from_be_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        bytes = &bytes[12..];
        if bytes.len() < len {
            return Err(malformed(format!("fragment claims {len} bytes, {} remain", bytes.len())));
        }
        let text = core::str::from_utf8(&bytes[..len])
            .map_err(|e| malformed(format!("fragment text is not UTF-8: {e}")))?;
        fragments.push(Fragment {
            turn_index,
            text: String::from(text),
        });
        bytes = &bytes[len..];
    }
    Ok(fragments)
}

/// On-disk chunk: `ISCH`, CRC-32 of the payload (u32 BE), payload.
pub fn encode_chunk_file(chunk: &Chunk) -> Vec<u8> {
    let payload = encode_payload(&chunk.fragments);
    let mut out = Vec::with_capacity(CHUNK_HEADER_LEN + payload.len());
    out.extend_from_slice(&CHUNK_MAGIC);
    out.extend_from_slice(&crc32fast::hash(&payload).to_be_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn decode_chunk_file(seq: u64, bytes: &[u8]) -> Result<Chunk, StorageError> {
    if bytes.len() < CHUNK_HEADER_LEN || bytes[..4] != CHUNK_MAGIC {
        return Err(StorageError::MalformedChunk {
            seq,
            reason: "missing ISCH header".into(),
        });
    }
    let expected = u32::from_be_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let payload = &bytes[CHUNK_HEADER_LEN..];
    if crc32fast::hash(payload) != expected {
        return Err(StorageError::ChecksumMismatch { seq });
    }
    Ok(Chunk {
        seq,
        fragments: decode_payload(seq, payload)?,
    })
}
