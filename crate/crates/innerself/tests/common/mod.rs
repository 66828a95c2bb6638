#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use innerself::adapters::{load_fixture_transcripts, Adapters};
use innerself::engine::{ClockMode, Engine, EngineOptions, TurnInput};
use innerself::store::{FsStore, Store};
use innerself::tables::Tables;
use innerself::wav;
use innerself_core::voice::EnrollmentSample;
use innerself_core::AudioClip;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn clip(name: &str) -> AudioClip {
    wav::read_wav(&fixtures().join(format!("{name}.wav"))).unwrap()
}

pub fn transcript(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(format!("{name}.txt")))
        .unwrap()
        .trim()
        .to_string()
}

pub fn reference_adapters() -> Adapters {
    Adapters::reference(load_fixture_transcripts(&fixtures()).unwrap())
}

pub fn options(clock: ClockMode) -> EngineOptions {
    EngineOptions {
        clock,
        ..EngineOptions::default()
    }
}

pub fn engine_with(store: Arc<dyn Store>, adapters: Adapters) -> Engine {
    Engine::new(Tables::shipped(), adapters, store, options(ClockMode::Logical)).unwrap()
}

pub fn engine_at(dir: &Path) -> Engine {
    engine_with(Arc::new(FsStore::open(dir).unwrap()), reference_adapters())
}

pub fn turn(name: &str) -> TurnInput {
    TurnInput {
        audio: clip(name),
        transcript_hint: None,
        want_audio: false,
    }
}

pub fn hinted(name: &str, text: &str) -> TurnInput {
    TurnInput {
        audio: clip(name),
        transcript_hint: Some(text.to_string()),
        want_audio: false,
    }
}

pub fn enrollment_samples() -> Vec<EnrollmentSample> {
    (1..=3)
        .map(|i| {
            let name = format!("enroll_{i}");
            EnrollmentSample::new(clip(&name), transcript(&name))
        })
        .collect()
}

/// What reconstruction should yield for a turn log.
pub fn expected_transcript(turns: &[innerself_core::storage::TurnRecord]) -> String {
    use innerself_core::storage::Role;
    turns
        .iter()
        .map(|t| {
            let tag = if t.role == Role::User { "U: " } else { "S: " };
            format!("{tag}{}\n", t.text)
        })
        .collect()
}
