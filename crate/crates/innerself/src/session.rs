//! Per-session state, the eviction queue, crash recovery and review reads.

use std::collections::VecDeque;

use innerself_core::conversation::StrategyHistory;
use innerself_core::storage::{
    chunk_fragments, emotion_trajectory as trajectory_of, ActionPlan, DialogueBuffer, Fragment,
    Role, StorageError, TrajectoryPoint, TurnRecord, MAX_CHUNK_TEXT_BYTES,
};
use innerself_core::voice::VoiceProfile;

use crate::store::{SessionMeta, Store, StoreError};

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub meta: SessionMeta,
    pub voice_profile: Option<VoiceProfile>,
    pub buffer: DialogueBuffer,
    pub history: StrategyHistory,
    pub plans: Vec<ActionPlan>,
    /// Index the next turn record will get.
    pub next_turn: u64,
}

impl SessionState {
    pub fn session_id(&self) -> &str {
        &self.meta.session_id
    }

    pub fn open_plans(&self) -> impl Iterator<Item = &ActionPlan> {
        self.plans.iter().filter(|p| p.is_open())
    }
}

/// Evicted text waiting to be written as chunks. Each pushed batch is
/// flushed as a unit; a failed write leaves the unwritten remainder queued
/// for the next attempt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvictionQueue {
    pending: VecDeque<Vec<Fragment>>,
    next_seq: u64,
}

impl EvictionQueue {
    pub fn starting_at(next_seq: u64) -> Self {
        Self {
            pending: VecDeque::new(),
            next_seq,
        }
    }

    pub fn push(&mut self, fragments: Vec<Fragment>) {
        if fragments.iter().any(|f| !f.text.is_empty()) {
            self.pending.push_back(fragments);
        }
    }

    /// Batches still waiting for the store.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes every pending batch in order and returns the sequence numbers
    /// written.
    pub fn flush(&mut self, store: &dyn Store, session_id: &str) -> Result<Vec<u64>, StoreError> {
        let mut written = Vec::new();
        while let Some(batch) = self.pending.front() {
            let chunks = chunk_fragments(batch, self.next_seq, MAX_CHUNK_TEXT_BYTES);
            for (i, chunk) in chunks.iter().enumerate() {
                if let Err(e) = store.write_chunk(session_id, chunk) {
                    let rest: Vec<Fragment> = chunks[i..].iter().flat_map(|c| c.fragments.clone()).collect();
                    self.pending[0] = rest;
                    return Err(e);
                }
                self.next_seq = chunk.seq + 1;
                written.push(chunk.seq);
            }
            self.pending.pop_front();
        }
        Ok(written)
    }
}

/// Queues `fragments` and flushes everything pending.
pub fn flush_evictions(
    fragments: Vec<Fragment>,
    queue: &mut EvictionQueue,
    store: &dyn Store,
    session_id: &str,
) -> Result<Vec<u64>, StoreError> {
    queue.push(fragments);
    queue.flush(store, session_id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub state: SessionState,
    pub evictions: EvictionQueue,
}

/// Replays the turn log into a fresh buffer, returning it with every
/// fragment it evicted.
pub fn replay_turns(alpha: usize, turns: &[TurnRecord]) -> Result<(DialogueBuffer, Vec<Fragment>), StorageError> {
    let mut buffer = DialogueBuffer::new(alpha)?;
    let mut evicted = Vec::new();
    for r in turns {
        evicted.extend(buffer.append_turn(r.turn_index, &r.role.buffer_line(&r.text))?);
    }
    Ok((buffer, evicted))
}

fn drop_prefix_bytes(fragments: Vec<Fragment>, mut bytes: usize) -> Vec<Fragment> {
    let mut out = Vec::new();
    for mut f in fragments {
        if bytes >= f.text.len() {
            bytes -= f.text.len();
            continue;
        }
        if bytes > 0 {
            f.text = f.text.split_off(bytes);
            bytes = 0;
        }
        out.push(f);
    }
    out
}

/// Loads a session and repairs whatever an interrupted turn left behind.
///
/// The turn log is authoritative. Replaying it gives the buffer content and
/// the full eviction stream; stored chunks must be a prefix of that stream,
/// missing chunks are written, and a stale buffer snapshot is replaced.
pub fn open_session(store: &dyn Store, session_id: &str) -> Result<Session, StoreError> {
    let meta = store.session_meta(session_id)?;
    let turns = store.turns(session_id)?;
    TurnRecord::validate_sequence(&turns)?;
    let (buffer, evicted) = replay_turns(meta.alpha, &turns)?;

    let count = store.chunk_count(session_id)?;
    let mut stored = String::new();
    for seq in 0..count {
        stored.push_str(&store.read_chunk(session_id, seq)?.text());
    }
    let evicted_text: String = evicted.iter().map(|f| f.text.as_str()).collect();
    if !evicted_text.starts_with(&stored) {
        return Err(StoreError::Corrupt(format!(
            "chunks of session `{session_id}` disagree with its turn log"
        )));
    }
    let mut evictions = EvictionQueue::starting_at(count);
    evictions.push(drop_prefix_bytes(evicted, stored.len()));
    // A store that is still failing keeps the remainder queued.
    let _ = evictions.flush(store, session_id);

    if store.load_buffer(session_id)?.as_ref() != Some(&buffer) {
        store.save_buffer(session_id, &buffer)?;
    }

    let mut history = StrategyHistory::new();
    for r in turns.iter().filter(|r| r.role == Role::System) {
        if let Some(s) = r.strategy {
            history.record(s);
        }
    }
    Ok(Session {
        state: SessionState {
            voice_profile: store.load_profile(session_id)?,
            plans: store.load_plans(session_id)?,
            next_turn: turns.len() as u64,
            meta,
            buffer,
            history,
        },
        evictions,
    })
}

/// Every character ever appended to the session's buffer: the stored chunks
/// in sequence order (each checksum-verified) followed by the buffer
/// snapshot.
pub fn reconstruct_transcript(store: &dyn Store, session_id: &str) -> Result<String, StoreError> {
    store.session_meta(session_id)?;
    let buffer = store.load_buffer(session_id)?;
    let count = store.chunk_count(session_id)?;
    let mut text = String::new();
    for seq in 0..count {
        text.push_str(&store.read_chunk(session_id, seq)?.text());
    }
    let Some(buffer) = buffer else {
        return if count == 0 {
            Ok(text)
        } else {
            Err(StoreError::Corrupt("chunks without a buffer snapshot".into()))
        };
    };
    let expected = buffer.total_appended();
    let have = (text.chars().count() + buffer.len()) as u64;
    if have < expected {
        return Err(StoreError::ChunkMissing { seq: count });
    }
    if have > expected {
        return Err(StoreError::Corrupt(format!(
            "{have} characters stored but only {expected} were appended"
        )));
    }
    text.push_str(&buffer.content());
    Ok(text)
}

pub fn emotion_trajectory(store: &dyn Store, session_id: &str) -> Result<Vec<TrajectoryPoint>, StoreError> {
    Ok(trajectory_of(&store.turns(session_id)?))
}
