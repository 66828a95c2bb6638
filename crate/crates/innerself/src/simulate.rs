//! Offline, deterministic end-to-end runs driven by a small script.
//!
//! ```text
//! # comment
//! user Sam
//! enroll enroll_1.wav | I like walking by the river when the weather is calm.
//! enroll enroll_2.wav | ...
//! plan finish the report | outline; draft; review
//! turn angry_loud.wav | I am so angry that nothing works today.
//! turn neutral_calm.wav
//! ```
//!
//! Paths are relative to the script. A `turn` without `| transcript` uses
//! the text in the WAV's sibling `.txt` file. Consecutive `enroll` lines form
//! one enrollment. `user` may only appear before any other directive.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use innerself_core::emotion::FixtureSpeechToText;
use innerself_core::voice::EnrollmentSample;
use innerself_core::AudioClip;
use serde::Serialize;
use thiserror::Error;

use crate::adapters::Adapters;
use crate::config::Config;
use crate::engine::{ClockMode, Engine, EngineOptions, TurnInput};
use crate::store::{FsStore, Store, StoreError};
use crate::tables::Tables;
use crate::wav;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub enum Step {
    Enroll {
        line: usize,
        samples: Vec<(PathBuf, String)>,
    },
    Plan {
        line: usize,
        description: String,
        steps: Vec<String>,
    },
    Turn {
        line: usize,
        wav: PathBuf,
        transcript: String,
    },
}

#[derive(Debug, Clone)]
pub struct Script {
    pub user_name: Option<String>,
    pub steps: Vec<Step>,
}

fn split_pipe(rest: &str) -> (&str, Option<&str>) {
    match rest.split_once('|') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (rest.trim(), None),
    }
}

pub fn parse_script(text: &str, base: &Path) -> Result<Script, ScriptParseError> {
    let mut script = Script {
        user_name: None,
        steps: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ScriptParseError { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (directive, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest = rest.trim();
        let existing = |p: &str| -> Result<PathBuf, ScriptParseError> {
            if p.is_empty() {
                return Err(err(format!("`{directive}` needs a WAV path")));
            }
            let path = base.join(p);
            if !path.is_file() {
                return Err(err(format!("missing file {}", path.display())));
            }
            Ok(path)
        };
        match directive {
            "user" => {
                if rest.is_empty() {
                    return Err(err("`user` needs a name".into()));
                }
                if script.user_name.is_some() || !script.steps.is_empty() {
                    return Err(err("`user` must come first and only once".into()));
                }
                script.user_name = Some(rest.to_string());
            }
            "enroll" => {
                let (path, transcript) = split_pipe(rest);
                let path = existing(path)?;
                let transcript = transcript
                    .filter(|t| !t.is_empty())
                    .ok_or_else(|| err("`enroll` needs `| transcript`".into()))?
                    .to_string();
                match script.steps.last_mut() {
                    Some(Step::Enroll { samples, .. }) => samples.push((path, transcript)),
                    _ => script.steps.push(Step::Enroll {
                        line,
                        samples: vec![(path, transcript)],
                    }),
                }
            }
            "plan" => {
                let (description, steps) = split_pipe(rest);
                if description.is_empty() {
                    return Err(err("`plan` needs a description".into()));
                }
                let steps: Vec<String> = steps
                    .unwrap_or("")
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
                if steps.is_empty() {
                    return Err(err("`plan` needs `| step; step`".into()));
                }
                script.steps.push(Step::Plan {
                    line,
                    description: description.to_string(),
                    steps,
                });
            }
            "turn" => {
                let (path, transcript) = split_pipe(rest);
                let wav = existing(path)?;
                let transcript = match transcript {
                    Some(t) => t.to_string(),
                    None => {
                        let txt = wav.with_extension("txt");
                        std::fs::read_to_string(&txt)
                            .map_err(|_| err(format!("missing file {} (no inline transcript)", txt.display())))?
                            .trim()
                            .to_string()
                    }
                };
                script.steps.push(Step::Turn { line, wav, transcript });
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    Ok(script)
}

pub fn session_id_for_seed(seed: u64) -> String {
    format!("sim-{seed:016x}")
}

/// Engine wired to reference adapters and the logical clock, storing under
/// the configured data directory.
pub fn simulation_engine(config: &Config) -> anyhow::Result<Engine> {
    let tables = Tables::load(&config.tables)?;
    let store: Arc<dyn Store> = Arc::new(FsStore::open(&config.data_dir)?);
    Engine::new(
        tables,
        Adapters::reference(FixtureSpeechToText::new()),
        store,
        EngineOptions {
            alpha: config.alpha,
            max_response_chars: config.max_response_chars,
            enrollment: config.enrollment.clone(),
            clock: ClockMode::Logical,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationSummary {
    pub session_id: String,
    pub turns: usize,
    pub failed_turns: usize,
    pub all_pass: bool,
}

#[derive(Serialize)]
struct FailedTurn<'a> {
    line: usize,
    code: &'a str,
    message: String,
}

fn load(path: &Path) -> anyhow::Result<AudioClip> {
    Ok(wav::read_wav(path)?)
}

/// Runs `script` as session `sim-<seed>`, replacing any earlier session
/// with that id, and writes one JSON line per turn to `out`.
///
/// A turn that fails is written as `{"line", "code", "message"}` and makes
/// the run fail; `all_pass` is true only when every turn succeeded and its
/// constraint report passed.
pub fn run_script(engine: &Engine, script: &Script, seed: u64, out: &mut dyn Write) -> anyhow::Result<SimulationSummary> {
    let session_id = session_id_for_seed(seed);
    match engine.store.delete_session(&session_id) {
        Ok(()) | Err(StoreError::UnknownSession(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let name = script
        .user_name
        .clone()
        .unwrap_or_else(|| engine.tables.strategies.defaults().user_name.clone());
    let mut session = engine.create_session(&name, Some(session_id.clone()))?;
    let mut summary = SimulationSummary {
        session_id,
        turns: 0,
        failed_turns: 0,
        all_pass: true,
    };
    for step in &script.steps {
        match step {
            Step::Enroll { line, samples } => {
                let samples = samples
                    .iter()
                    .map(|(p, t)| Ok(EnrollmentSample::new(load(p)?, t.clone())))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                engine
                    .enroll_voice(&mut session, samples)
                    .map_err(|e| anyhow::anyhow!("line {line}: enrollment failed: {e}"))?;
            }
            Step::Plan { line, description, steps } => {
                engine
                    .add_plan(&mut session, description, steps.clone())
                    .map_err(|e| anyhow::anyhow!("line {line}: {e}"))?;
            }
            Step::Turn { line, wav, transcript } => {
                let input = TurnInput {
                    audio: load(wav)?,
                    transcript_hint: Some(transcript.clone()),
                    want_audio: session.state.voice_profile.is_some(),
                };
                summary.turns += 1;
                let json = match engine.process_turn(&mut session, input, &mut |_| {}) {
                    Ok(outcome) => {
                        summary.all_pass &= outcome.constraint_report.all_pass();
                        serde_json::to_string(&outcome)?
                    }
                    Err(e) => {
                        summary.failed_turns += 1;
                        summary.all_pass = false;
                        serde_json::to_string(&FailedTurn {
                            line: *line,
                            code: e.code(),
                            message: e.to_string(),
                        })?
                    }
                };
                writeln!(out, "{json}")?;
            }
        }
    }
    out.flush()?;
    Ok(summary)
}
