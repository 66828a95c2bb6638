use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::prosody::ProsodyParams;
use super::strategy::{DialogStrategy, StrategyRef};
use super::{ConversationError, Lexicons};
use crate::adapter::AdapterError;
use crate::lexicon;
use crate::storage::DEFAULT_CAPACITY;

/// Language-model calls per turn before falling back to the script.
pub const MAX_GENERATION_ATTEMPTS: usize = 3;

pub trait LanguageModel {
    fn complete(&self, prompt: &str) -> Result<String, AdapterError>;
}

/// How the response refers to the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PronounPerson {
    /// Spoken as the user's own inner voice: "I can handle this".
    FirstSingular,
    /// Addressed to the user: "you are making progress".
    Second,
    /// Addressed to the user by name, never speaking as them.
    NameAddress,
}

impl PronounPerson {
    pub fn directive(self) -> &'static str {
        match self {
            PronounPerson::FirstSingular => {
                "Speak in the first person singular (I, me, my) as the user's own inner voice; do not address the user as \"you\"."
            }
            PronounPerson::Second => "Address the user directly in the second person (you, your).",
            PronounPerson::NameAddress => {
                "Address the user by name; do not speak as the user (no I, me, my)."
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseConstraints {
    pub max_chars: usize,
    pub pronoun_person: PronounPerson,
    pub require_positive_affect: bool,
    pub forbid_absolutes: bool,
}

impl ResponseConstraints {
    pub fn new(
        max_chars: usize,
        pronoun_person: PronounPerson,
        require_positive_affect: bool,
        forbid_absolutes: bool,
    ) -> Result<Self, ConversationError> {
        if max_chars == 0 || max_chars > DEFAULT_CAPACITY {
            return Err(ConversationError::InvalidConstraints(format!(
                "max_chars must be within 1..={DEFAULT_CAPACITY}, got {max_chars}"
            )));
        }
        Ok(Self {
            max_chars,
            pronoun_person,
            require_positive_affect,
            forbid_absolutes,
        })
    }

    /// Constraints in force for `strategy`: its pronoun person and affect
    /// requirement, absolutes always forbidden.
    pub fn for_strategy(strategy: &DialogStrategy, max_chars: usize) -> Result<Self, ConversationError> {
        Self::new(max_chars, strategy.pronoun_person, strategy.positive_affect, true)
    }
}

/// One pass/fail flag per constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub length: bool,
    pub pronoun_person: bool,
    pub absolutes: bool,
    pub positive_affect: bool,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.length && self.pronoun_person && self.absolutes && self.positive_affect
    }

    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.length {
            v.push("length: the reply is too long");
        }
        if !self.pronoun_person {
            v.push("pronoun_person: the reply uses the wrong grammatical person");
        }
        if !self.absolutes {
            v.push("absolutes: the reply contains absolute terms");
        }
        if !self.positive_affect {
            v.push("positive_affect: the reply is not more positive than negative");
        }
        v
    }
}

pub fn validate_response(
    text: &str,
    constraints: &ResponseConstraints,
    lexicons: &Lexicons,
) -> ConstraintReport {
    let length = text.chars().count() <= constraints.max_chars;

    let tokens = lexicon::tokenize(text);
    let first = tokens.iter().any(|t| lexicon::is_first_person_singular(t));
    let second = tokens.iter().any(|t| lexicon::is_second_person(t));
    let pronoun_person = match constraints.pronoun_person {
        PronounPerson::FirstSingular => first && !second,
        PronounPerson::Second => second,
        PronounPerson::NameAddress => !first,
    };

    let absolutes = !constraints.forbid_absolutes || lexicons.absolutes.find_matches(text).is_empty();

    let positive_affect = if constraints.require_positive_affect {
        let (pos, neg) = lexicons.valence.valence_counts(text);
        pos > neg
    } else {
        true
    };

    ConstraintReport {
        length,
        pronoun_person,
        absolutes,
        positive_affect,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    Model,
    Template,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedResponse {
    pub text: String,
    pub report: ConstraintReport,
    /// Number of language-model calls made.
    pub attempts: usize,
    pub source: ResponseSource,
}

/// Asks `llm` for a reply, validating each candidate. A rejected candidate
/// is fed back with its violations, up to [`MAX_GENERATION_ATTEMPTS`] calls
/// in total. After that the first constraint-clean entry of `fallbacks`
/// (rendered script templates) is returned; if none is clean the last one
/// is returned with its failing report.
pub fn generate_response(
    prompt: &str,
    llm: &dyn LanguageModel,
    constraints: &ResponseConstraints,
    lexicons: &Lexicons,
    fallbacks: &[String],
) -> Result<GeneratedResponse, ConversationError> {
    if prompt.trim().is_empty() {
        return Err(ConversationError::EmptyPrompt);
    }
    let mut current = String::from(prompt);
    for attempt in 1..=MAX_GENERATION_ATTEMPTS {
        let candidate = llm.complete(&current)?;
        let candidate = candidate.trim();
        let report = validate_response(candidate, constraints, lexicons);
        if report.all_pass() && !candidate.is_empty() {
            return Ok(GeneratedResponse {
                text: String::from(candidate),
                report,
                attempts: attempt,
                source: ResponseSource::Model,
            });
        }
        current = format!(
            "{prompt}\nREJECTED ATTEMPT {attempt}: {candidate}\nVIOLATIONS: {}\nRewrite the reply so that every constraint holds.",
            report.violations().join("; ")
        );
    }

    let mut last = None;
    for text in fallbacks {
        let report = validate_response(text, constraints, lexicons);
        if report.all_pass() {
            return Ok(GeneratedResponse {
                text: text.clone(),
                report,
                attempts: MAX_GENERATION_ATTEMPTS,
                source: ResponseSource::Template,
            });
        }
        last = Some((text, report));
    }
    let (text, report) = last.ok_or_else(|| {
        ConversationError::InvalidStrategyTable("no fallback script available".into())
    })?;
    Ok(GeneratedResponse {
        text: text.clone(),
        report,
        attempts: MAX_GENERATION_ATTEMPTS,
        source: ResponseSource::Template,
    })
}

/// A finished response: text, where it came from, how it should sound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePlan {
    pub text: String,
    pub strategy: StrategyRef,
    pub prosody: ProsodyParams,
    pub constraint_report: ConstraintReport,
}
