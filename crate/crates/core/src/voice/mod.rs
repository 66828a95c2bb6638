//! Voice cloning: enrollment checks, log-mel spectrograms, speaker
//! embedding, synthesis, vocoding and prosody rendering.
//!
//! The neural stages sit behind [`SpeakerEncoder`], [`Synthesizer`] and
//! [`Vocoder`]. The reference implementations are plain signal processing:
//! they produce tone-like audio that follows the text's rhythm, not speech.

mod encoder;
mod enroll;
mod mel;
mod prosody;
mod synth;
mod vocoder;

use alloc::string::String;

use thiserror::Error;

use crate::adapter::AdapterError;
use crate::audio::AudioError;

pub use encoder::{embed_speaker, ReferenceSpeakerEncoder, SpeakerEncoder, VoiceProfile, EMBEDDING_DIM};
pub use enroll::{
    validate_enrollment, voiced_seconds, EnrollmentIssue, EnrollmentRules, EnrollmentSample,
};
pub use mel::{
    compute_mel, hz_to_mel, mel_to_hz, MelFilterbank, MelParams, MelSpectrogram, LOG_FLOOR,
    POWER_FLOOR,
};
pub use prosody::apply_prosody;
pub use synth::{synthesize, ReferenceSynthesizer, Synthesizer, FRAMES_PER_CHAR};
pub use vocoder::{vocode, ReferenceVocoder, Vocoder, VOCODER_PEAK};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoiceError {
    #[error("clip has {len} samples; at least {n_fft} are needed for one frame")]
    ClipTooShort { len: usize, n_fft: usize },
    #[error("nothing to synthesize")]
    EmptyText,
    #[error("no enrollment sample passed validation")]
    NoValidSamples,
    #[error("invalid voice profile: {0}")]
    InvalidProfile(String),
    #[error("invalid mel spectrogram: {0}")]
    InvalidMel(String),
    #[error(transparent)]
    Audio(AudioError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}
