//! The turn loop: speech in, emotion, strategy, constrained response,
//! prosody and cloned-voice audio out, with every turn persisted.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use innerself_core::conversation::{
    build_prompt, generate_response, prosody_for_emotion, select_strategy, ConstraintReport,
    ConversationError, DialogStrategy, ProsodyParams, ResponseConstraints, ResponseSource,
    SlotValues, StrategyId, StrategyRef,
};
use innerself_core::emotion::{
    self, classify, extract_text_features, fuse, EmotionError, EmotionResult, SpeechToText,
    TEXT_FEATURE_DIM,
};
use innerself_core::storage::{ActionPlan, DialogueBuffer, Role, StorageError, TurnRecord};
use innerself_core::voice::{
    apply_prosody, embed_speaker, synthesize, validate_enrollment, vocode, EnrollmentIssue,
    EnrollmentRules, EnrollmentSample, VoiceError, VoiceProfile,
};
use innerself_core::{AdapterError, AudioClip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{Adapters, HintedSpeechToText};
use crate::session::{open_session, EvictionQueue, Session, SessionState};
use crate::store::{SessionMeta, Store, StoreError};
use crate::tables::Tables;
use crate::wav;

/// How timestamps and latencies are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Wall-clock timestamps and measured stage latencies.
    #[default]
    System,
    /// Timestamps equal turn indices and latencies are zero, so runs with
    /// the reference adapters are byte-for-byte reproducible.
    Logical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub alpha: usize,
    pub max_response_chars: usize,
    pub enrollment: EnrollmentRules,
    pub clock: ClockMode,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            alpha: innerself_core::storage::DEFAULT_CAPACITY,
            max_response_chars: 300,
            enrollment: EnrollmentRules::default(),
            clock: ClockMode::System,
        }
    }
}

/// Events pushed to live listeners while a turn runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LiveEvent {
    PartialTranscript { turn_index: u64, text: String },
    Emotion { turn_index: u64, emotion: EmotionResult },
    ResponseText { turn_index: u64, text: String, strategy: StrategyRef },
    AudioReady { turn_index: u64, audio_ref: String },
}

#[derive(Debug, Clone)]
pub struct TurnInput {
    pub audio: AudioClip,
    /// Transcript supplied with the audio; used only when the configured
    /// speech-to-text backend accepts hints.
    pub transcript_hint: Option<String>,
    pub want_audio: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub session_id: String,
    /// Index of the user turn; the reply is recorded at `turn_index + 1`.
    pub turn_index: u64,
    pub transcript: String,
    pub emotion: EmotionResult,
    pub strategy: StrategyRef,
    pub response_text: String,
    pub response_source: ResponseSource,
    pub generation_attempts: usize,
    pub constraint_report: ConstraintReport,
    pub prosody: ProsodyParams,
    pub response_audio_ref: Option<String>,
    pub audio_error: Option<String>,
    pub storage_warning: Option<String>,
    pub timestamp_ms: u64,
    pub latency_ms: BTreeMap<String, u64>,
}

#[derive(Debug, Error)]
pub enum TurnError {
    #[error("no speech detected")]
    EmptyUtterance,
    #[error("utterance is {duration:.3} s long; too short to analyse")]
    ClipTooShort { duration: f64 },
    #[error("utterance of {chars} characters exceeds the limit of {limit}")]
    UtteranceTooLong { chars: usize, limit: usize },
    #[error("speech-to-text failed: {0}")]
    SpeechToText(AdapterError),
    #[error("emotion recognition failed: {0}")]
    Emotion(EmotionError),
    #[error("response generation failed: {0}")]
    Conversation(ConversationError),
    #[error("storage failed: {0}")]
    Store(#[from] StoreError),
}

impl TurnError {
    /// Stable code reported by the API.
    pub fn code(&self) -> &'static str {
        match self {
            TurnError::EmptyUtterance => "EMPTY_UTTERANCE",
            TurnError::ClipTooShort { .. } => "CLIP_TOO_SHORT",
            TurnError::UtteranceTooLong { .. } => "UTTERANCE_TOO_LONG",
            TurnError::SpeechToText(AdapterError::Unavailable { .. }) => "STT_UNAVAILABLE",
            TurnError::SpeechToText(_) => "STT_FAILED",
            TurnError::Emotion(EmotionError::Adapter(AdapterError::Unavailable { .. })) => {
                "FEATURES_UNAVAILABLE"
            }
            TurnError::Emotion(_) => "EMOTION_FAILED",
            TurnError::Conversation(ConversationError::Adapter(AdapterError::Unavailable { .. })) => {
                "LLM_UNAVAILABLE"
            }
            TurnError::Conversation(ConversationError::Adapter(_)) => "LLM_FAILED",
            TurnError::Conversation(_) => "RESPONSE_FAILED",
            TurnError::Store(StoreError::UnknownSession(_)) => "UNKNOWN_SESSION",
            TurnError::Store(_) => "STORE_UNAVAILABLE",
        }
    }

    pub fn retry_after_ms(&self) -> Option<u64> {
        match self {
            TurnError::SpeechToText(e)
            | TurnError::Emotion(EmotionError::Adapter(e))
            | TurnError::Conversation(ConversationError::Adapter(e)) => e.retry_after_ms(),
            _ => None,
        }
    }
}

impl From<EmotionError> for TurnError {
    fn from(e: EmotionError) -> Self {
        match e {
            EmotionError::EmptyTranscript | EmotionError::SilentClip { .. } => TurnError::EmptyUtterance,
            EmotionError::ClipTooShort { duration } => TurnError::ClipTooShort { duration },
            other => TurnError::Emotion(other),
        }
    }
}

impl From<ConversationError> for TurnError {
    fn from(e: ConversationError) -> Self {
        TurnError::Conversation(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub index: usize,
    pub issues: Vec<EnrollmentIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollOutcome {
    pub profile: VoiceProfile,
    pub accepted: usize,
    /// Rejected samples, by position in the request.
    pub warnings: Vec<SampleReport>,
}

#[derive(Debug, Error)]
pub enum EnrollError {
    #[error("no enrollment samples given")]
    NoSamples,
    #[error("no enrollment sample passed validation")]
    NoValidSamples { warnings: Vec<SampleReport> },
    #[error(transparent)]
    Voice(#[from] VoiceError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid user name: {0}")]
    InvalidUserName(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<StorageError> for SessionError {
    fn from(e: StorageError) -> Self {
        SessionError::InvalidPlan(e.to_string())
    }
}

const MAX_USER_NAME_CHARS: usize = 40;

struct StageTimer {
    mode: ClockMode,
    last: Instant,
    laps: BTreeMap<String, u64>,
}

impl StageTimer {
    fn new(mode: ClockMode) -> Self {
        Self {
            mode,
            last: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let ms = match self.mode {
            ClockMode::System => self.last.elapsed().as_millis() as u64,
            ClockMode::Logical => 0,
        };
        self.laps.insert(stage.to_string(), ms);
        self.last = Instant::now();
    }
}

pub struct Engine {
    pub tables: Tables,
    pub adapters: Adapters,
    pub store: Arc<dyn Store>,
    pub options: EngineOptions,
}

impl Engine {
    pub fn new(
        tables: Tables,
        adapters: Adapters,
        store: Arc<dyn Store>,
        options: EngineOptions,
    ) -> anyhow::Result<Self> {
        let audio_dim = adapters.features.descriptor().feature_dim;
        let expected = audio_dim + TEXT_FEATURE_DIM;
        if tables.head.input_dim() != expected {
            anyhow::bail!(
                "classifier head expects {} inputs but the feature backends produce {expected}",
                tables.head.input_dim()
            );
        }
        ResponseConstraints::new(
            options.max_response_chars,
            innerself_core::conversation::PronounPerson::Second,
            true,
            true,
        )?;
        DialogueBuffer::new(options.alpha)?;
        Ok(Self {
            tables,
            adapters,
            store,
            options,
        })
    }

    /// Tables, adapters and a filesystem store as configured.
    pub fn from_config(config: &crate::config::Config) -> anyhow::Result<Self> {
        let store: Arc<dyn Store> = Arc::new(crate::store::FsStore::open(&config.data_dir)?);
        Self::new(
            Tables::load(&config.tables)?,
            Adapters::from_config(&config.adapters, config.fixtures_dir.as_deref())?,
            store,
            EngineOptions {
                alpha: config.alpha,
                max_response_chars: config.max_response_chars,
                enrollment: config.enrollment.clone(),
                clock: ClockMode::System,
            },
        )
    }

    fn timestamp_ms(&self, logical: u64) -> u64 {
        match self.options.clock {
            ClockMode::System => Utc::now().timestamp_millis().max(0) as u64,
            ClockMode::Logical => logical,
        }
    }

    fn iso_timestamp(&self, logical: u64) -> String {
        let ms = self.timestamp_ms(logical) as i64;
        DateTime::from_timestamp_millis(ms)
            .unwrap_or_default()
            .to_rfc3339_opts(SecondsFormat::Millis, true)
    }

    /// Rejects names that would make a shipped script break its own
    /// constraints, e.g. a name containing "never" or "you".
    pub fn validate_user_name(&self, name: &str) -> Result<String, SessionError> {
        let name = name.split_whitespace().collect::<Vec<_>>().join(" ");
        let chars = name.chars().count();
        if chars == 0 || chars > MAX_USER_NAME_CHARS {
            return Err(SessionError::InvalidUserName(format!(
                "must be 1 to {MAX_USER_NAME_CHARS} characters"
            )));
        }
        let slots = SlotValues {
            user_name: Some(name.clone()),
            ..SlotValues::default()
        };
        for id in StrategyId::ALL {
            let steps = self.tables.strategies.spec(id).steps;
            for step in 0..steps {
                let s = self.tables.strategies.strategy(id, step);
                let text = s.render(&slots, self.tables.strategies.defaults());
                let c = self.constraints_for(&s).map_err(|e| SessionError::InvalidUserName(e.to_string()))?;
                let report = innerself_core::conversation::validate_response(&text, &c, &self.tables.lexicons);
                if !report.all_pass() {
                    return Err(SessionError::InvalidUserName(format!(
                        "`{name}` breaks the {id} script ({})",
                        report.violations().join("; ")
                    )));
                }
            }
        }
        Ok(name)
    }

    fn constraints_for(&self, s: &DialogStrategy) -> Result<ResponseConstraints, ConversationError> {
        ResponseConstraints::for_strategy(s, self.options.max_response_chars)
    }

    pub fn create_session(&self, user_name: &str, session_id: Option<String>) -> Result<Session, SessionError> {
        let user_name = self.validate_user_name(user_name)?;
        let session_id = session_id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        let meta = SessionMeta {
            session_id: session_id.clone(),
            user_name,
            created_at: self.iso_timestamp(0),
            alpha: self.options.alpha,
        };
        self.store.create_session(&meta)?;
        let buffer = DialogueBuffer::new(meta.alpha).expect("alpha is checked by Engine::new");
        self.store.save_buffer(&session_id, &buffer)?;
        Ok(Session {
            state: SessionState {
                meta,
                voice_profile: None,
                buffer,
                history: Default::default(),
                plans: Vec::new(),
                next_turn: 0,
            },
            evictions: EvictionQueue::default(),
        })
    }

    pub fn open_session(&self, session_id: &str) -> Result<Session, StoreError> {
        open_session(&*self.store, session_id)
    }

    pub fn add_plan(
        &self,
        session: &mut Session,
        description: &str,
        steps: Vec<String>,
    ) -> Result<ActionPlan, SessionError> {
        if description.trim().is_empty() {
            return Err(SessionError::InvalidPlan("description is empty".into()));
        }
        let plan_id = format!("plan-{}", session.state.plans.len() + 1);
        let plan = ActionPlan::new(session.state.session_id(), plan_id, description.trim(), steps)?;
        let mut plans = session.state.plans.clone();
        plans.push(plan.clone());
        self.store.save_plans(session.state.session_id(), &plans)?;
        session.state.plans = plans;
        Ok(plan)
    }

    pub fn set_plan_step(
        &self,
        session: &mut Session,
        plan_id: &str,
        index: usize,
        done: bool,
    ) -> Result<ActionPlan, SessionError> {
        let mut plans = session.state.plans.clone();
        let plan = plans
            .iter_mut()
            .find(|p| p.plan_id == plan_id)
            .ok_or_else(|| SessionError::InvalidPlan(format!("no plan `{plan_id}`")))?;
        plan.set_step(index, done)?;
        let updated = plan.clone();
        self.store.save_plans(session.state.session_id(), &plans)?;
        session.state.plans = plans;
        Ok(updated)
    }

    /// Validates every sample, builds a profile from the ones that pass and
    /// replaces the session's profile. Rejected samples are reported as
    /// warnings as long as at least one sample is accepted.
    pub fn enroll_voice(
        &self,
        session: &mut Session,
        samples: Vec<EnrollmentSample>,
    ) -> Result<EnrollOutcome, EnrollError> {
        if samples.is_empty() {
            return Err(EnrollError::NoSamples);
        }
        let mut accepted = Vec::new();
        let mut warnings = Vec::new();
        for (index, sample) in samples.into_iter().enumerate() {
            match validate_enrollment(sample, &self.options.enrollment) {
                Ok(s) => accepted.push(s),
                Err(issues) => warnings.push(SampleReport { index, issues }),
            }
        }
        if accepted.is_empty() {
            return Err(EnrollError::NoValidSamples { warnings });
        }
        let profile = embed_speaker(
            &accepted,
            &*self.adapters.encoder,
            self.iso_timestamp(session.state.next_turn),
        )?;
        self.store.save_profile(session.state.session_id(), &profile)?;
        session.state.voice_profile = Some(profile.clone());
        Ok(EnrollOutcome {
            profile,
            accepted: accepted.len(),
            warnings,
        })
    }

    fn render_audio(
        &self,
        session_id: &str,
        text: &str,
        profile: &VoiceProfile,
        prosody: &ProsodyParams,
        timer: &mut StageTimer,
    ) -> Result<String, String> {
        let mel = synthesize(text, profile, prosody, &*self.adapters.synthesizer).map_err(|e| e.to_string())?;
        timer.lap("synthesize");
        let raw = vocode(&mel, &*self.adapters.vocoder).map_err(|e| e.to_string())?;
        timer.lap("vocode");
        let shaped = apply_prosody(&raw, prosody);
        timer.lap("apply_prosody");
        self.store
            .put_audio(session_id, &wav::encode_wav(&shaped))
            .map_err(|e| e.to_string())
    }

    /// Runs one user utterance through the pipeline.
    ///
    /// Nothing is persisted and the session is left untouched unless the
    /// turn gets as far as a response text. Once it does, both turn records
    /// are written durably before the in-memory state changes; audio
    /// rendering and chunk flushing failures are reported in the outcome
    /// instead of failing the turn.
    pub fn process_turn(
        &self,
        session: &mut Session,
        input: TurnInput,
        on_event: &mut dyn FnMut(LiveEvent),
    ) -> Result<TurnOutcome, TurnError> {
        let mut timer = StageTimer::new(self.options.clock);
        let state = &session.state;
        let session_id = state.session_id().to_string();
        let user_index = state.next_turn;
        let clip = input.audio;

        let hinted;
        let stt: &dyn SpeechToText = match (&input.transcript_hint, self.adapters.accepts_transcript_hints) {
            (Some(hint), true) => {
                hinted = HintedSpeechToText(hint);
                &hinted
            }
            _ => &*self.adapters.stt,
        };
        let transcript = emotion::transcribe(&clip, stt).map_err(|e| match e {
            EmotionError::Adapter(a) => TurnError::SpeechToText(a),
            other => other.into(),
        })?;
        let transcript = transcript.split_whitespace().collect::<Vec<_>>().join(" ");
        timer.lap("transcribe");
        on_event(LiveEvent::PartialTranscript {
            turn_index: user_index,
            text: transcript.clone(),
        });

        let limit = innerself_core::storage::OVERSIZE_FACTOR * state.buffer.capacity();
        let chars = Role::User.buffer_line(&transcript).chars().count();
        if chars > limit {
            return Err(TurnError::UtteranceTooLong { chars, limit });
        }

        let audio_features = self.adapters.features.extract(&clip)?;
        let lexicons = &self.tables.lexicons;
        let text_features = extract_text_features(&transcript, &lexicons.valence, &lexicons.absolutes)?;
        let emotion = classify(&fuse(&audio_features, &text_features)?, &self.tables.head)?;
        timer.lap("emotion");
        on_event(LiveEvent::Emotion {
            turn_index: user_index,
            emotion: emotion.clone(),
        });

        let open_plan = state.open_plans().next();
        let strategy = select_strategy(&emotion, &state.history, open_plan.is_some(), &self.tables.strategies);
        let reframer = &self.tables.reframer;
        let reframed_text = (strategy.id == StrategyId::ImmediateReframe && !reframer.detect(&transcript).is_empty())
            .then(|| reframer.reframe(&transcript));
        let slots = SlotValues {
            user_name: Some(state.meta.user_name.clone()),
            topic: open_plan.map(|p| p.description.clone()),
            reframed_text,
        };
        timer.lap("strategy");

        // Work on a copy so a failed turn leaves the session unchanged.
        let mut buffer = state.buffer.clone();
        let mut evicted = buffer
            .append_turn(user_index, &Role::User.buffer_line(&transcript))
            .map_err(|e| TurnError::Store(e.into()))?;
        let constraints = self.constraints_for(&strategy)?;
        let defaults = self.tables.strategies.defaults();
        let prompt = build_prompt(&strategy, &buffer.context_window(), &slots, defaults, &constraints, &lexicons.absolutes)?;
        timer.lap("prompt");

        let fallbacks = self.fallback_scripts(&strategy, &slots);
        let generated = generate_response(&prompt, &*self.adapters.llm, &constraints, lexicons, &fallbacks)?;
        timer.lap("generate");
        on_event(LiveEvent::ResponseText {
            turn_index: user_index,
            text: generated.text.clone(),
            strategy: strategy.reference(),
        });

        let prosody = prosody_for_emotion(&emotion, &self.tables.prosody);
        timer.lap("prosody");

        let user_audio_ref = self.store.put_audio(&session_id, &wav::encode_wav(&clip))?;
        let (response_audio_ref, audio_error) = match (&state.voice_profile, input.want_audio) {
            (Some(profile), true) => {
                match self.render_audio(&session_id, &generated.text, profile, &prosody, &mut timer) {
                    Ok(sha) => (Some(sha), None),
                    Err(e) => (None, Some(e)),
                }
            }
            (None, true) => (None, Some("no voice profile enrolled".to_string())),
            (_, false) => (None, None),
        };

        evicted.extend(
            buffer
                .append_turn(user_index + 1, &Role::System.buffer_line(&generated.text))
                .map_err(|e| TurnError::Store(e.into()))?,
        );
        let timestamp_ms = self.timestamp_ms(user_index);
        let records = [
            TurnRecord {
                session_id: session_id.clone(),
                turn_index: user_index,
                role: Role::User,
                text: transcript.clone(),
                emotion: Some(emotion.clone()),
                strategy: None,
                prosody: None,
                timestamp_ms,
                audio_ref: Some(user_audio_ref),
            },
            TurnRecord {
                session_id: session_id.clone(),
                turn_index: user_index + 1,
                role: Role::System,
                text: generated.text.clone(),
                emotion: None,
                strategy: Some(strategy.reference()),
                prosody: Some(prosody),
                timestamp_ms: self.timestamp_ms(user_index + 1),
                audio_ref: response_audio_ref.clone(),
            },
        ];
        self.store.append_turns(&session_id, &records)?;

        // Committed: the turn log now holds this turn.
        let state = &mut session.state;
        state.buffer = buffer;
        state.history.record(strategy.reference());
        state.next_turn = user_index + 2;
        let mut warnings = Vec::new();
        session.evictions.push(evicted);
        if let Err(e) = session.evictions.flush(&*self.store, &session_id) {
            warnings.push(format!("chunk flush deferred: {e}"));
        }
        if let Err(e) = self.store.save_buffer(&session_id, &session.state.buffer) {
            warnings.push(format!("buffer snapshot deferred: {e}"));
        }
        timer.lap("persist");

        if let Some(sha) = &response_audio_ref {
            on_event(LiveEvent::AudioReady {
                turn_index: user_index,
                audio_ref: sha.clone(),
            });
        }

        Ok(TurnOutcome {
            session_id,
            turn_index: user_index,
            transcript,
            emotion,
            strategy: strategy.reference(),
            response_text: generated.text,
            response_source: generated.source,
            generation_attempts: generated.attempts,
            constraint_report: generated.report,
            prosody,
            response_audio_ref,
            audio_error,
            storage_warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
            timestamp_ms,
            latency_ms: timer.laps,
        })
    }

    /// Scripts tried, in order, when the language model keeps failing:
    /// every step of the strategy with the turn's slots, then the current
    /// step with only the user's name filled in. The last one is clean by
    /// construction because user names are vetted at session creation.
    fn fallback_scripts(&self, strategy: &DialogStrategy, slots: &SlotValues) -> Vec<String> {
        let defaults = self.tables.strategies.defaults();
        let mut out = Vec::new();
        let steps = strategy.steps();
        for k in 0..steps {
            let mut s = strategy.clone();
            s.step_index = (strategy.step_index + k) % steps;
            out.push(s.render(slots, defaults));
        }
        let bare = SlotValues {
            user_name: slots.user_name.clone(),
            ..SlotValues::default()
        };
        out.push(strategy.render(&bare, defaults));
        out
    }
}
