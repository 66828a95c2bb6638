//! Emotion recognition: acoustic and lexical features, concatenation fusion,
//! a linear head and a numerically stable softmax.

mod acoustic;
mod classifier;
mod features;
mod label;
mod stt;
mod text;

use alloc::string::String;

use thiserror::Error;

use crate::adapter::AdapterError;

pub use acoustic::{
    extract_audio_features, AudioFeatureExtractor, ReferenceAudioFeatures, AUDIO_FEATURE_DIM,
    AUDIO_FEATURE_NAMES, MIN_CLIP_SECONDS, SILENCE_PEAK,
};
pub use classifier::{classify, softmax, ClassifierHead, EmotionResult, LOGIT_CLAMP};
pub use features::{fuse, AdapterDescriptor, FeatureVector, Modality};
pub use label::EmotionLabel;
pub use stt::{transcribe, FixtureSpeechToText, SpeechToText};
pub use text::{
    english_absolute_terms, extract_text_features, ValenceLexicon, TEXT_FEATURE_DIM,
    TEXT_FEATURE_NAMES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmotionError {
    #[error("clip is {duration:.3} s long; at least {MIN_CLIP_SECONDS} s is required")]
    ClipTooShort { duration: f64 },
    #[error("clip is silent (peak {peak:e})")]
    SilentClip { peak: f64 },
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("expected {expected:?} features, got {found:?}")]
    ModalityMismatch { expected: Modality, found: Modality },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("invalid classifier head: {0}")]
    InvalidHead(String),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// Runs the full recognition path for one utterance whose transcript is
/// already known.
pub fn recognize(
    clip: &crate::AudioClip,
    transcript: &str,
    audio: &dyn AudioFeatureExtractor,
    valence: &ValenceLexicon,
    absolutes: &crate::lexicon::Lexicon,
    head: &ClassifierHead,
) -> Result<EmotionResult, EmotionError> {
    let audio_features = audio.extract(clip)?;
    let text_features = extract_text_features(transcript, valence, absolutes)?;
    let fused = fuse(&audio_features, &text_features)?;
    classify(&fused, head)
}
