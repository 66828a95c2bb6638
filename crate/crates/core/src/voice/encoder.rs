use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::enroll::EnrollmentSample;
use super::mel::{MelFilterbank, MelParams};
use super::VoiceError;
use crate::adapter::AdapterError;
use crate::audio::AudioClip;
use crate::math;

pub const EMBEDDING_DIM: usize = 256;

const NORM_TOLERANCE: f64 = 1e-6;

/// Maps one enrollment clip to a speaker embedding of [`EMBEDDING_DIM`]
/// values.
pub trait SpeakerEncoder {
    fn embed(&self, clip: &AudioClip) -> Result<Vec<f64>, AdapterError>;
}

/// Unit-norm speaker embedding plus enrollment metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile")]
pub struct VoiceProfile {
    embedding: Vec<f64>,
    sample_count: u32,
    created_at: String,
}

#[derive(Deserialize)]
struct ProfileFile {
    embedding: Vec<f64>,
    sample_count: u32,
    created_at: String,
}

impl TryFrom<ProfileFile> for VoiceProfile {
    type Error = VoiceError;

    fn try_from(f: ProfileFile) -> Result<Self, Self::Error> {
        VoiceProfile::new(f.embedding, f.sample_count, f.created_at)
    }
}

impl VoiceProfile {
    pub fn new(embedding: Vec<f64>, sample_count: u32, created_at: String) -> Result<Self, VoiceError> {
        if embedding.len() != EMBEDDING_DIM {
            return Err(VoiceError::InvalidProfile(format!(
                "embedding has {} values, expected {EMBEDDING_DIM}",
                embedding.len()
            )));
        }
        let norm = l2_norm(&embedding);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(VoiceError::InvalidProfile(format!("embedding norm is {norm}")));
        }
        if sample_count == 0 {
            return Err(VoiceError::InvalidProfile("sample_count must be at least 1".into()));
        }
        Ok(Self {
            embedding,
            sample_count,
            created_at,
        })
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    pub fn sample_count(&self) -> u32 {
        self.sample_count
    }

    pub fn created_at(&self) -> &str {
        &self.created_at
    }

    pub fn cosine(&self, other: &VoiceProfile) -> f64 {
        self.embedding.iter().zip(&other.embedding).map(|(a, b)| a * b).sum()
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = l2_norm(&v);
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    for x in &mut v {
        *x /= norm;
    }
    Some(v)
}

/// Speaker profile from the validated samples: the L2-normalized mean of
/// their embeddings. Unvalidated samples are ignored.
pub fn embed_speaker(
    samples: &[EnrollmentSample],
    encoder: &dyn SpeakerEncoder,
    created_at: impl Into<String>,
) -> Result<VoiceProfile, VoiceError> {
    let valid: Vec<&EnrollmentSample> = samples.iter().filter(|s| s.validated).collect();
    if valid.is_empty() {
        return Err(VoiceError::NoValidSamples);
    }
    let mut sum = vec![0.0; EMBEDDING_DIM];
    for sample in &valid {
        let e = encoder.embed(&sample.clip)?;
        if e.len() != EMBEDDING_DIM || e.iter().any(|x| !x.is_finite()) {
            return Err(VoiceError::Adapter(AdapterError::protocol(
                "speaker-encoder",
                format!("expected {EMBEDDING_DIM} finite values, got {}", e.len()),
            )));
        }
        for (s, x) in sum.iter_mut().zip(&e) {
            *s += x;
        }
    }
    let n = valid.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    let embedding = normalize(mean)
        .ok_or_else(|| VoiceError::InvalidProfile("sample embeddings cancel out".into()))?;
    VoiceProfile::new(embedding, valid.len() as u32, created_at.into())
}

/// Mel statistics as a voice fingerprint: per-bin means (centred on their
/// average) followed by per-bin variances, zero-padded and normalized.
#[derive(Debug, Clone)]
pub struct ReferenceSpeakerEncoder {
    filterbank: MelFilterbank,
}

impl Default for ReferenceSpeakerEncoder {
    fn default() -> Self {
        Self::new(MelParams::default()).expect("default mel parameters are valid")
    }
}

impl ReferenceSpeakerEncoder {
    pub fn new(params: MelParams) -> Result<Self, VoiceError> {
        if 2 * params.n_mels > EMBEDDING_DIM {
            return Err(VoiceError::InvalidMel(format!(
                "{} mel bins do not fit a {EMBEDDING_DIM}-value embedding",
                params.n_mels
            )));
        }
        Ok(Self {
            filterbank: MelFilterbank::new(params)?,
        })
    }
}

impl SpeakerEncoder for ReferenceSpeakerEncoder {
    fn embed(&self, clip: &AudioClip) -> Result<Vec<f64>, AdapterError> {
        let mel = self
            .filterbank
            .compute(clip)
            .map_err(|e| AdapterError::protocol("reference-encoder", format!("{e}")))?;
        let m = mel.n_mels();
        let t = mel.n_frames() as f64;
        let mut mean = vec![0.0; m];
        for frame in mel.frames() {
            for (acc, v) in mean.iter_mut().zip(frame) {
                *acc += v / t;
            }
        }
        let mut var = vec![0.0; m];
        for frame in mel.frames() {
            for ((acc, v), mu) in var.iter_mut().zip(frame).zip(&mean) {
                *acc += (v - mu) * (v - mu) / t;
            }
        }
        let level = mean.iter().sum::<f64>() / m as f64;
        let mut out = vec![0.0; EMBEDDING_DIM];
        for i in 0..m {
            out[i] = mean[i] - level;
            out[m + i] = var[i];
        }
        normalize(out).ok_or_else(|| {
            AdapterError::protocol("reference-encoder", "clip has a flat mel spectrum")
        })
    }
}
