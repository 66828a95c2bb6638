use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::StorageError;

/// Buffer capacity α in characters.
pub const DEFAULT_CAPACITY: usize = 600;

/// Appends longer than this multiple of the capacity are rejected.
pub const OVERSIZE_FACTOR: usize = 10;

/// A run of text together with the turn it was appended in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub turn_index: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Segment {
    turn_index: u64,
    text: String,
    chars: usize,
}

/// Fixed-capacity FIFO over the conversation text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Snapshot", into = "Snapshot")]
pub struct DialogueBuffer {
    capacity: usize,
    segments: VecDeque<Segment>,
    len: usize,
    total_appended: u64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    capacity: usize,
    total_appended: u64,
    segments: Vec<Fragment>,
}

impl TryFrom<Snapshot> for DialogueBuffer {
    type Error = StorageError;

    fn try_from(s: Snapshot) -> Result<Self, Self::Error> {
        let mut buffer = DialogueBuffer::new(s.capacity)?;
        for f in s.segments {
            let chars = f.text.chars().count();
            if chars == 0 {
                continue;
            }
            buffer.len += chars;
            buffer.segments.push_back(Segment {
                turn_index: f.turn_index,
                text: f.text,
                chars,
            });
        }
        if buffer.len > buffer.capacity {
            return Err(StorageError::InvalidSnapshot(alloc::format!(
                "{} characters stored with capacity {}",
                buffer.len,
                buffer.capacity
            )));
        }
        if (buffer.len as u64) > s.total_appended {
            return Err(StorageError::InvalidSnapshot(
                "content is longer than the append history".into(),
            ));
        }
        buffer.total_appended = s.total_appended;
        Ok(buffer)
    }
}

impl From<DialogueBuffer> for Snapshot {
    fn from(b: DialogueBuffer) -> Self {
        Snapshot {
            capacity: b.capacity,
            total_appended: b.total_appended,
            segments: b
                .segments
                .into_iter()
                .map(|s| Fragment {
                    turn_index: s.turn_index,
                    text: s.text,
                })
                .collect(),
        }
    }
}

impl Default for DialogueBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY).expect("default capacity is positive")
    }
}

impl DialogueBuffer {
    pub fn new(capacity: usize) -> Result<Self, StorageError> {
        if capacity == 0 {
            return Err(StorageError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            segments: VecDeque::new(),
            len: 0,
            total_appended: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Characters currently held.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Characters appended over the buffer's lifetime.
    pub fn total_appended(&self) -> u64 {
        self.total_appended
    }

    pub fn content(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            out.push_str(&s.text);
        }
        out
    }

    /// The text handed to the language model as dialogue context.
    pub fn context_window(&self) -> String {
        self.content()
    }

    /// Current content split by originating turn.
    pub fn fragments(&self) -> Vec<Fragment> {
        self.segments
            .iter()
            .map(|s| Fragment {
                turn_index: s.turn_index,
                text: s.text.clone(),
            })
            .collect()
    }

    /// Appends `text` under the turn index of the newest segment and returns
    /// the evicted prefix as one string.
    pub fn append(&mut self, text: &str) -> Result<String, StorageError> {
        let turn = self.segments.back().map_or(0, |s| s.turn_index);
        let evicted = self.append_turn(turn, text)?;
        Ok(evicted.into_iter().map(|f| f.text).collect())
    }

    /// Appends `text` tagged with `turn_index`. Returns the evicted prefix,
    /// oldest first, split at turn boundaries.
    pub fn append_turn(&mut self, turn_index: u64, text: &str) -> Result<Vec<Fragment>, StorageError> {
        let chars = text.chars().count();
        let limit = OVERSIZE_FACTOR * self.capacity;
        if chars > limit {
            return Err(StorageError::OversizeAppend { len: chars, limit });
        }
        if chars == 0 {
            return Ok(Vec::new());
        }
        self.segments.push_back(Segment {
            turn_index,
            text: String::from(text),
            chars,
        });
        self.len += chars;
        self.total_appended += chars as u64;

        let mut evicted: Vec<Fragment> = Vec::new();
        while self.len > self.capacity {
            let excess = self.len - self.capacity;
            let front = self.segments.front_mut().expect("len > 0 implies a segment");
            let removed = if front.chars <= excess {
                let seg = self.segments.pop_front().expect("checked above");
                self.len -= seg.chars;
                Fragment {
                    turn_index: seg.turn_index,
                    text: seg.text,
                }
            } else {
                let cut = front
                    .text
                    .char_indices()
                    .nth(excess)
                    .map(|(i, _)| i)
                    .expect("excess < segment length");
                let rest = front.text.split_off(cut);
                let head = core::mem::replace(&mut front.text, rest);
                front.chars -= excess;
                self.len -= excess;
                Fragment {
                    turn_index: front.turn_index,
                    text: head,
                }
            };
            match evicted.last_mut() {
                Some(last) if last.turn_index == removed.turn_index => last.text.push_str(&removed.text),
                _ => evicted.push(removed),
            }
        }
        Ok(evicted)
    }
}
