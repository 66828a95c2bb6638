//! Reference lexical features.
//!
//! Layout of the 6-dimensional vector, every entry divided by the token
//! count: negative-valence matches, positive-valence matches, absolute-term
//! matches, first-person-singular pronouns, `?` marks, `!` marks.

use alloc::vec;

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Modality};
use super::EmotionError;
use crate::lexicon::{self, Lexicon};

pub const TEXT_FEATURE_DIM: usize = 6;

pub const TEXT_FEATURE_NAMES: [&str; TEXT_FEATURE_DIM] = [
    "negative_ratio",
    "positive_ratio",
    "absolute_ratio",
    "first_person_ratio",
    "question_ratio",
    "exclamation_ratio",
];

const POSITIVE_EN: &str = include_str!("../../data/positive.txt");
const NEGATIVE_EN: &str = include_str!("../../data/negative.txt");
const ABSOLUTES_EN: &str = include_str!("../../data/absolutes.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceLexicon {
    pub positive: Lexicon,
    pub negative: Lexicon,
}

impl ValenceLexicon {
    /// The shipped English word lists.
    pub fn english() -> Self {
        Self {
            positive: Lexicon::parse(POSITIVE_EN),
            negative: Lexicon::parse(NEGATIVE_EN),
        }
    }

    /// `(positive, negative)` match counts in `text`.
    pub fn valence_counts(&self, text: &str) -> (usize, usize) {
        (
            self.positive.count_matches(text),
            self.negative.count_matches(text),
        )
    }
}

/// The shipped English absolute-term lexicon.
pub fn english_absolute_terms() -> Lexicon {
    Lexicon::parse(ABSOLUTES_EN)
}

pub fn extract_text_features(
    transcript: &str,
    valence: &ValenceLexicon,
    absolutes: &Lexicon,
) -> Result<FeatureVector, EmotionError> {
    let tokens = lexicon::tokenize(transcript);
    if tokens.is_empty() {
        return Err(EmotionError::EmptyTranscript);
    }
    let n = tokens.len() as f64;
    let (positive, negative) = valence.valence_counts(transcript);
    let absolute = absolutes.count_matches(transcript);
    let first_person = tokens
        .iter()
        .filter(|t| lexicon::is_first_person_singular(t))
        .count();
    let questions = transcript.chars().filter(|&c| c == '?').count();
    let exclamations = transcript.chars().filter(|&c| c == '!').count();

    FeatureVector::new(
        vec![
            negative as f64 / n,
            positive as f64 / n,
            absolute as f64 / n,
            first_person as f64 / n,
            questions as f64 / n,
            exclamations as f64 / n,
        ],
        Modality::Text,
    )
}
