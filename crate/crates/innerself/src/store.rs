//! Session persistence. [`Store`] abstracts the external database; the
//! default [`FsStore`] lays sessions out as
//!
//! ```text
//! <root>/<session_id>/session.json
//! <root>/<session_id>/turns.jsonl
//! <root>/<session_id>/chunks/<seq>.chunk
//! <root>/<session_id>/buffer.json
//! <root>/<session_id>/profile.json
//! <root>/<session_id>/plans.json
//! <root>/<session_id>/audio/<sha256>.wav
//! ```
//!
//! Every file except the turn log is replaced atomically (temp file, fsync,
//! rename). The turn log is append-only; a torn final line is ignored on
//! read and cut off before the next append.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use innerself_core::storage::{
    decode_chunk_file, encode_chunk_file, ActionPlan, Chunk, DialogueBuffer, StorageError,
    TurnRecord,
};
use innerself_core::voice::VoiceProfile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unavailable: {0}")]
    Unavailable(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("invalid identifier `{0}`")]
    InvalidId(String),
    #[error("chunk {seq} is missing")]
    ChunkMissing { seq: u64 },
    #[error("chunk {seq} failed its checksum")]
    ChecksumMismatch { seq: u64 },
    #[error("corrupt session data: {0}")]
    Corrupt(String),
}

impl From<StorageError> for StoreError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::ChunkMissing { seq } => StoreError::ChunkMissing { seq },
            StorageError::ChecksumMismatch { seq } => StoreError::ChecksumMismatch { seq },
            other => StoreError::Corrupt(other.to_string()),
        }
    }
}

impl From<io::Error> for StoreError {
    fn from(e: io::Error) -> Self {
        StoreError::Unavailable(e.to_string())
    }
}

/// Session header written once at creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub user_name: String,
    pub created_at: String,
    /// Buffer capacity the session was created with.
    pub alpha: usize,
}

pub trait Store: Send + Sync {
    fn create_session(&self, meta: &SessionMeta) -> Result<(), StoreError>;
    fn session_meta(&self, session_id: &str) -> Result<SessionMeta, StoreError>;
    fn list_sessions(&self) -> Result<Vec<String>, StoreError>;
    fn delete_session(&self, session_id: &str) -> Result<(), StoreError>;

    /// Durably appends records to the turn log in one write.
    fn append_turns(&self, session_id: &str, records: &[TurnRecord]) -> Result<(), StoreError>;
    fn turns(&self, session_id: &str) -> Result<Vec<TurnRecord>, StoreError>;

    /// Durably writes one chunk; returns once it is on disk.
    fn write_chunk(&self, session_id: &str, chunk: &Chunk) -> Result<(), StoreError>;
    /// One past the highest chunk sequence number present.
    fn chunk_count(&self, session_id: &str) -> Result<u64, StoreError>;
    fn read_chunk(&self, session_id: &str, seq: u64) -> Result<Chunk, StoreError>;

    fn save_buffer(&self, session_id: &str, buffer: &DialogueBuffer) -> Result<(), StoreError>;
    fn load_buffer(&self, session_id: &str) -> Result<Option<DialogueBuffer>, StoreError>;

    fn save_profile(&self, session_id: &str, profile: &VoiceProfile) -> Result<(), StoreError>;
    fn load_profile(&self, session_id: &str) -> Result<Option<VoiceProfile>, StoreError>;

    fn save_plans(&self, session_id: &str, plans: &[ActionPlan]) -> Result<(), StoreError>;
    fn load_plans(&self, session_id: &str) -> Result<Vec<ActionPlan>, StoreError>;

    /// Stores a WAV file under its SHA-256 and returns the hex digest.
    fn put_audio(&self, session_id: &str, wav: &[u8]) -> Result<String, StoreError>;
    fn get_audio(&self, sha256: &str) -> Result<Option<Vec<u8>>, StoreError>;
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Session ids double as directory names.
pub fn validate_session_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

fn validate_sha(sha: &str) -> Result<(), StoreError> {
    if sha.len() == 64 && sha.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()) {
        Ok(())
    } else {
        Err(StoreError::InvalidId(sha.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct FsStore {
    root: PathBuf,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Replaces `path` with `bytes`: write a sibling temp file, fsync it,
/// rename over the target, fsync the directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(
        ".{name}.tmp-{}-{}",
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    sync_dir(dir)
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    // Directory fsync makes the rename durable on Unix; elsewhere opening a
    // directory fails and there is nothing more to do.
    match File::open(dir) {
        Ok(d) => d.sync_all().or(Ok(())),
        Err(_) => Ok(()),
    }
}

impl FsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        validate_session_id(id)?;
        let dir = self.root.join(id);
        if !dir.join("session.json").is_file() {
            return Err(StoreError::UnknownSession(id.to_string()));
        }
        Ok(dir)
    }

    pub fn chunk_path(&self, id: &str, seq: u64) -> Result<PathBuf, StoreError> {
        Ok(self.session_dir(id)?.join("chunks").join(format!("{seq}.chunk")))
    }

    fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, StoreError> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec_pretty(value).expect("serializable value");
        Ok(atomic_write(path, &bytes)?)
    }
}

impl Store for FsStore {
    fn create_session(&self, meta: &SessionMeta) -> Result<(), StoreError> {
        validate_session_id(&meta.session_id)?;
        let dir = self.root.join(&meta.session_id);
        if dir.join("session.json").exists() {
            return Err(StoreError::SessionExists(meta.session_id.clone()));
        }
        fs::create_dir_all(dir.join("chunks"))?;
        fs::create_dir_all(dir.join("audio"))?;
        Self::write_json(&dir.join("session.json"), meta)
    }

    fn session_meta(&self, session_id: &str) -> Result<SessionMeta, StoreError> {
        let dir = self.session_dir(session_id)?;
        Self::read_json(&dir.join("session.json"))?
            .ok_or_else(|| StoreError::UnknownSession(session_id.to_string()))
    }

    fn list_sessions(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.path().join("session.json").is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    ids.push(name.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn delete_session(&self, session_id: &str) -> Result<(), StoreError> {
        let dir = self.session_dir(session_id)?;
        fs::remove_dir_all(dir)?;
        Ok(())
    }

    fn append_turns(&self, session_id: &str, records: &[TurnRecord]) -> Result<(), StoreError> {
        let path = self.session_dir(session_id)?.join("turns.jsonl");
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        // Cut off a torn final line left by an interrupted write.
        let len = file.metadata()?.len();
        if len > 0 {
            let mut contents = Vec::new();
            file.seek(SeekFrom::Start(0))?;
            file.read_to_end(&mut contents)?;
            if contents.last() != Some(&b'\n') {
                let keep = contents.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
                file.set_len(keep as u64)?;
            }
        }
        let mut out = Vec::new();
        for r in records {
            serde_json::to_writer(&mut out, r).expect("serializable record");
            out.push(b'\n');
        }
        file.write_all(&out)?;
        file.sync_all()?;
        Ok(())
    }

    fn turns(&self, session_id: &str) -> Result<Vec<TurnRecord>, StoreError> {
        let path = self.session_dir(session_id)?.join("turns.jsonl");
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        complete
            .lines()
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str(line)
                    .map_err(|e| StoreError::Corrupt(format!("turns.jsonl line {}: {e}", i + 1)))
            })
            .collect()
    }

    fn write_chunk(&self, session_id: &str, chunk: &Chunk) -> Result<(), StoreError> {
        let path = self.chunk_path(session_id, chunk.seq)?;
        Ok(atomic_write(&path, &encode_chunk_file(chunk))?)
    }

    fn chunk_count(&self, session_id: &str) -> Result<u64, StoreError> {
        let dir = self.session_dir(session_id)?.join("chunks");
        let mut count = 0;
        match fs::read_dir(&dir) {
            Ok(entries) => {
                for entry in entries {
                    let name = entry?.file_name();
                    let seq = name
                        .to_str()
                        .and_then(|n| n.strip_suffix(".chunk"))
                        .and_then(|n| n.parse::<u64>().ok());
                    if let Some(seq) = seq {
                        count = count.max(seq + 1);
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(count)
    }

    fn read_chunk(&self, session_id: &str, seq: u64) -> Result<Chunk, StoreError> {
        let path = self.chunk_path(session_id, seq)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::ChunkMissing { seq })
            }
            Err(e) => return Err(e.into()),
        };
        Ok(decode_chunk_file(seq, &bytes)?)
    }

    fn save_buffer(&self, session_id: &str, buffer: &DialogueBuffer) -> Result<(), StoreError> {
        Self::write_json(&self.session_dir(session_id)?.join("buffer.json"), buffer)
    }

    fn load_buffer(&self, session_id: &str) -> Result<Option<DialogueBuffer>, StoreError> {
        Self::read_json(&self.session_dir(session_id)?.join("buffer.json"))
    }

    fn save_profile(&self, session_id: &str, profile: &VoiceProfile) -> Result<(), StoreError> {
        Self::write_json(&self.session_dir(session_id)?.join("profile.json"), profile)
    }

    fn load_profile(&self, session_id: &str) -> Result<Option<VoiceProfile>, StoreError> {
        Self::read_json(&self.session_dir(session_id)?.join("profile.json"))
    }

    fn save_plans(&self, session_id: &str, plans: &[ActionPlan]) -> Result<(), StoreError> {
        Self::write_json(&self.session_dir(session_id)?.join("plans.json"), &plans)
    }

    fn load_plans(&self, session_id: &str) -> Result<Vec<ActionPlan>, StoreError> {
        Ok(Self::read_json(&self.session_dir(session_id)?.join("plans.json"))?.unwrap_or_default())
    }

    fn put_audio(&self, session_id: &str, wav: &[u8]) -> Result<String, StoreError> {
        let sha = sha256_hex(wav);
        let path = self.session_dir(session_id)?.join("audio").join(format!("{sha}.wav"));
        if !path.exists() {
            atomic_write(&path, wav)?;
        }
        Ok(sha)
    }

    fn get_audio(&self, sha256: &str) -> Result<Option<Vec<u8>>, StoreError> {
        validate_sha(sha256)?;
        for id in self.list_sessions()? {
            let path = self.root.join(id).join("audio").join(format!("{sha256}.wav"));
            match fs::read(&path) {
                Ok(bytes) => return Ok(Some(bytes)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use innerself_core::storage::Fragment;

    fn meta(id: &str) -> SessionMeta {
        SessionMeta {
            session_id: id.into(),
            user_name: "Ana".into(),
            created_at: "2026-01-01T00:00:00Z".into(),
            alpha: 600,
        }
    }

    #[test]
    fn ids_are_checked() {
        assert!(validate_session_id("abc-123_x").is_ok());
        assert!(validate_session_id("../etc").is_err());
        assert!(validate_session_id("").is_err());
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path()).unwrap();
        assert!(matches!(store.session_meta("nope"), Err(StoreError::UnknownSession(_))));
        assert!(matches!(store.get_audio("../x"), Err(StoreError::InvalidId(_))));
    }

    #[test]
    fn chunk_round_trip_and_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path()).unwrap();
        store.create_session(&meta("s1")).unwrap();
        assert!(matches!(store.create_session(&meta("s1")), Err(StoreError::SessionExists(_))));
        let chunk = Chunk {
            seq: 0,
            fragments: vec![Fragment { turn_index: 0, text: "U: hi\n".into() }],
        };
        store.write_chunk("s1", &chunk).unwrap();
        assert_eq!(store.read_chunk("s1", 0).unwrap(), chunk);
        assert_eq!(store.chunk_count("s1").unwrap(), 1);
        assert!(matches!(store.read_chunk("s1", 1), Err(StoreError::ChunkMissing { seq: 1 })));
    }

    #[test]
    fn torn_turn_log_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path()).unwrap();
        store.create_session(&meta("s1")).unwrap();
        let path = dir.path().join("s1").join("turns.jsonl");
        fs::write(&path, "{\"session_id\":\"s1\",\"turn").unwrap();
        assert!(store.turns("s1").unwrap().is_empty());
        let rec: TurnRecord = serde_json::from_str(
            r#"{"session_id":"s1","turn_index":0,"role":"system","text":"hi","strategy":{"id":"small_talk","step":0},"prosody":{"pitch_shift":0.0,"volume_gain":0.0,"rate":1.0},"timestamp_ms":0}"#,
        )
        .unwrap();
        store.append_turns("s1", std::slice::from_ref(&rec)).unwrap();
        assert_eq!(store.turns("s1").unwrap(), vec![rec]);
    }

    #[test]
    fn audio_is_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path()).unwrap();
        store.create_session(&meta("s1")).unwrap();
        let sha = store.put_audio("s1", b"RIFF....").unwrap();
        assert_eq!(sha, sha256_hex(b"RIFF...."));
        assert_eq!(store.get_audio(&sha).unwrap().unwrap(), b"RIFF....");
        assert!(store.get_audio(&"0".repeat(64)).unwrap().is_none());
    }
}
