//! Dialog strategy routing, absolute-term reframing, prompt construction,
//! constrained response generation and the emotion-to-prosody mapping.
//!
//! Crisis detection and clinical safety classification are deliberately not
//! part of this module; responses are self-talk scripts, not therapy.

mod prompt;
mod prosody;
mod reframe;
mod response;
mod strategy;

use alloc::string::String;

use thiserror::Error;

use crate::adapter::AdapterError;
use crate::emotion::{english_absolute_terms, ValenceLexicon};
use crate::lexicon::Lexicon;

pub use prompt::{build_prompt, extract_script, ScriptEchoModel, MAX_CONTEXT_CHARS};
pub use prosody::{prosody_for_emotion, ProsodyParams, ProsodyTable};
pub use reframe::{
    detect_absolutes, AbsoluteSpan, PinnedPair, Reframer, Rewrite, RewriteKind, SubstitutionTable,
};
pub use response::{
    generate_response, validate_response, ConstraintReport, GeneratedResponse, LanguageModel,
    PronounPerson, ResponseConstraints, ResponsePlan, ResponseSource, MAX_GENERATION_ATTEMPTS,
};
pub use strategy::{
    select_strategy, DialogStrategy, SlotDefaults, SlotValues, StrategyHistory, StrategyId, StrategyRef,
    StrategySpec, StrategyTable, CONFIDENCE_THRESHOLD, NEGATIVE_MASS_THRESHOLD, SLOT_NAMES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConversationError {
    #[error("context is {len} characters; at most {MAX_CONTEXT_CHARS} fit in the prompt")]
    ContextOverflow { len: usize },
    #[error("invalid strategy table: {0}")]
    InvalidStrategyTable(String),
    #[error("invalid substitution table: {0}")]
    InvalidSubstitutionTable(String),
    #[error("invalid prosody: {0}")]
    InvalidProsody(String),
    #[error("invalid response constraints: {0}")]
    InvalidConstraints(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// Word lists consulted when validating responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    pub valence: ValenceLexicon,
    pub absolutes: Lexicon,
}

impl Lexicons {
    pub fn english() -> Self {
        Self {
            valence: ValenceLexicon::english(),
            absolutes: english_absolute_terms(),
        }
    }
}
