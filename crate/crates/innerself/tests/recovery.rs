mod common;

use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use innerself::engine::{ClockMode, Engine};
use innerself::session::reconstruct_transcript;
use innerself::store::{FsStore, SessionMeta, Store, StoreError};
use innerself::tables::Tables;
use innerself_core::storage::{ActionPlan, Chunk, DialogueBuffer, TurnRecord};
use innerself_core::voice::VoiceProfile;

/// An [`FsStore`] whose writes can be made to fail on demand.
#[derive(Default)]
struct Faults {
    append: AtomicBool,
    chunks: AtomicBool,
    buffer: AtomicBool,
}

struct Flaky {
    inner: FsStore,
    faults: Arc<Faults>,
}

fn check(flag: &AtomicBool) -> Result<(), StoreError> {
    if flag.load(Ordering::SeqCst) {
        Err(StoreError::Unavailable("injected failure".into()))
    } else {
        Ok(())
    }
}

impl Store for Flaky {
    fn create_session(&self, meta: &SessionMeta) -> Result<(), StoreError> {
        self.inner.create_session(meta)
    }
    fn session_meta(&self, id: &str) -> Result<SessionMeta, StoreError> {
        self.inner.session_meta(id)
    }
    fn list_sessions(&self) -> Result<Vec<String>, StoreError> {
        self.inner.list_sessions()
    }
    fn delete_session(&self, id: &str) -> Result<(), StoreError> {
        self.inner.delete_session(id)
    }
    fn append_turns(&self, id: &str, records: &[TurnRecord]) -> Result<(), StoreError> {
        check(&self.faults.append)?;
        self.inner.append_turns(id, records)
    }
    fn turns(&self, id: &str) -> Result<Vec<TurnRecord>, StoreError> {
        self.inner.turns(id)
    }
    fn write_chunk(&self, id: &str, chunk: &Chunk) -> Result<(), StoreError> {
        check(&self.faults.chunks)?;
        self.inner.write_chunk(id, chunk)
    }
    fn chunk_count(&self, id: &str) -> Result<u64, StoreError> {
        self.inner.chunk_count(id)
    }
    fn read_chunk(&self, id: &str, seq: u64) -> Result<Chunk, StoreError> {
        self.inner.read_chunk(id, seq)
    }
    fn save_buffer(&self, id: &str, buffer: &DialogueBuffer) -> Result<(), StoreError> {
        check(&self.faults.buffer)?;
        self.inner.save_buffer(id, buffer)
    }
    fn load_buffer(&self, id: &str) -> Result<Option<DialogueBuffer>, StoreError> {
        self.inner.load_buffer(id)
    }
    fn save_profile(&self, id: &str, profile: &VoiceProfile) -> Result<(), StoreError> {
        self.inner.save_profile(id, profile)
    }
    fn load_profile(&self, id: &str) -> Result<Option<VoiceProfile>, StoreError> {
        self.inner.load_profile(id)
    }
    fn save_plans(&self, id: &str, plans: &[ActionPlan]) -> Result<(), StoreError> {
        self.inner.save_plans(id, plans)
    }
    fn load_plans(&self, id: &str) -> Result<Vec<ActionPlan>, StoreError> {
        self.inner.load_plans(id)
    }
    fn put_audio(&self, id: &str, wav: &[u8]) -> Result<String, StoreError> {
        self.inner.put_audio(id, wav)
    }
    fn get_audio(&self, sha: &str) -> Result<Option<Vec<u8>>, StoreError> {
        self.inner.get_audio(sha)
    }
}

const SMALL_ALPHA: usize = 300;

fn engine_over(store: Arc<dyn Store>) -> Engine {
    let mut options = options(ClockMode::Logical);
    options.alpha = SMALL_ALPHA;
    Engine::new(Tables::shipped(), reference_adapters(), store, options).unwrap()
}

fn flaky(dir: &Path) -> (Engine, Arc<Faults>) {
    let faults = Arc::new(Faults::default());
    let store = Flaky {
        inner: FsStore::open(dir).unwrap(),
        faults: faults.clone(),
    };
    (engine_over(Arc::new(store)), faults)
}

const SPEAKERS: [&str; 5] = ["angry_loud", "anxious_fast", "sad_soft", "shame_quiet", "neutral_calm"];

fn assert_consistent(store: &dyn Store, id: &str) {
    let turns = store.turns(id).unwrap();
    assert_eq!(reconstruct_transcript(store, id).unwrap(), expected_transcript(&turns));
}

#[test]
fn failed_chunk_writes_are_retried() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, faults) = flaky(dir.path());
    let mut s = engine.create_session("Sam", None).unwrap();
    let id = s.state.session_id().to_string();

    faults.chunks.store(true, Ordering::SeqCst);
    let mut warned = false;
    for name in SPEAKERS {
        let out = engine.process_turn(&mut s, turn(name), &mut |_| {}).unwrap();
        warned |= out.storage_warning.is_some();
    }
    assert!(warned, "evictions should have hit the failing chunk store");
    assert!(s.evictions.pending_len() > 0);
    assert_eq!(engine.store.chunk_count(&id).unwrap(), 0);

    // The in-memory queue drains on the next turn once writes succeed.
    faults.chunks.store(false, Ordering::SeqCst);
    let out = engine.process_turn(&mut s, turn("neutral_calm"), &mut |_| {}).unwrap();
    assert!(out.storage_warning.is_none());
    assert_eq!(s.evictions.pending_len(), 0);
    assert_consistent(&*engine.store, &id);
}

#[test]
fn lost_evictions_are_rebuilt_on_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, faults) = flaky(dir.path());
    let mut s = engine.create_session("Sam", None).unwrap();
    let id = s.state.session_id().to_string();
    faults.chunks.store(true, Ordering::SeqCst);
    faults.buffer.store(true, Ordering::SeqCst);
    for name in SPEAKERS {
        engine.process_turn(&mut s, turn(name), &mut |_| {}).unwrap();
    }
    // Process "dies" with its queue; only the turn log made it to disk.
    drop(s);

    let engine = engine_at(dir.path());
    let reopened = engine.open_session(&id).unwrap();
    assert_eq!(reopened.state.next_turn, 10);
    assert_eq!(reopened.state.buffer.len(), SMALL_ALPHA);
    assert!(engine.store.chunk_count(&id).unwrap() > 0);
    assert_consistent(&*engine.store, &id);
}

#[test]
fn failed_log_append_leaves_no_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (engine, faults) = flaky(dir.path());
    let mut s = engine.create_session("Sam", None).unwrap();
    engine.process_turn(&mut s, turn("sad_soft"), &mut |_| {}).unwrap();
    let buffer = s.state.buffer.clone();

    faults.append.store(true, Ordering::SeqCst);
    let err = engine.process_turn(&mut s, turn("angry_loud"), &mut |_| {}).unwrap_err();
    assert_eq!(err.code(), "STORE_UNAVAILABLE");
    assert_eq!(s.state.next_turn, 2);
    assert_eq!(s.state.buffer, buffer);

    faults.append.store(false, Ordering::SeqCst);
    let out = engine.process_turn(&mut s, turn("angry_loud"), &mut |_| {}).unwrap();
    assert_eq!(out.turn_index, 2);
    assert_consistent(&*engine.store, s.state.session_id());
}

#[test]
fn corrupt_chunk_is_reported_by_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let engine = engine_over(Arc::new(FsStore::open(dir.path()).unwrap()));
    let mut s = engine.create_session("Sam", None).unwrap();
    for name in SPEAKERS {
        engine.process_turn(&mut s, turn(name), &mut |_| {}).unwrap();
    }
    let id = s.state.session_id().to_string();
    let store = FsStore::open(dir.path()).unwrap();
    let count = store.chunk_count(&id).unwrap();
    assert!(count >= 2);
    let path = store.chunk_path(&id, 1).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x20;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(
        reconstruct_transcript(&store, &id),
        Err(StoreError::ChecksumMismatch { seq: 1, .. })
    ));
}

fn turn_lines(data: &Path) -> usize {
    std::fs::read_dir(data)
        .ok()
        .and_then(|mut d| d.next())
        .and_then(|e| std::fs::read_to_string(e.ok()?.path().join("turns.jsonl")).ok())
        .map_or(0, |t| t.lines().count())
}

#[test]
fn killed_process_leaves_a_recoverable_session() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let config = dir.path().join("innerself.toml");
    std::fs::write(
        &config,
        format!("data_dir = {:?}\nalpha = {SMALL_ALPHA}\n", data.display().to_string()),
    )
    .unwrap();
    let mut script = String::from("user Sam\n");
    for i in 0..400 {
        let name = SPEAKERS[i % SPEAKERS.len()];
        script.push_str(&format!("turn {}\n", fixtures().join(format!("{name}.wav")).display()));
    }
    let script_path = dir.path().join("long.script");
    std::fs::write(&script_path, script).unwrap();

    let mut child = Command::new(env!("CARGO_BIN_EXE_innerself"))
        .arg("--config")
        .arg(&config)
        .arg("simulate")
        .arg(&script_path)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let start = Instant::now();
    while turn_lines(&data) < 12 {
        assert!(start.elapsed() < Duration::from_secs(120), "simulation made no progress");
        assert!(child.try_wait().unwrap().is_none(), "simulation finished before it was killed");
        std::thread::sleep(Duration::from_millis(20));
    }
    child.kill().unwrap();
    child.wait().unwrap();

    let store: Arc<dyn Store> = Arc::new(FsStore::open(&data).unwrap());
    let id = store.list_sessions().unwrap().remove(0);
    let engine = engine_over(store.clone());
    let mut s = engine.open_session(&id).unwrap();
    let logged = store.turns(&id).unwrap().len();
    assert_eq!(s.state.next_turn as usize, logged);
    assert_eq!(logged % 2, 0, "user and system records are appended together");
    assert_consistent(&*store, &id);

    engine.process_turn(&mut s, turn("neutral_calm"), &mut |_| {}).unwrap();
    assert_consistent(&*store, &id);
}
