//! Mono PCM audio held as normalized `f64` samples.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp;
use crate::math;

/// Sample rate every stage of the pipeline works at. Audio arriving at a
/// different rate is resampled on ingest.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AudioError {
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("sample {index} = {value} is outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// A mono clip. Samples are always finite and within `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClip")]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

#[derive(Deserialize)]
struct RawClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl TryFrom<RawClip> for AudioClip {
    type Error = AudioError;

    fn try_from(raw: RawClip) -> Result<Self, Self::Error> {
        AudioClip::new(raw.samples, raw.sample_rate)
    }
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        for (index, &value) in samples.iter().enumerate() {
            if !value.is_finite() {
                return Err(AudioError::NonFinite { index });
            }
            if !(-1.0..=1.0).contains(&value) {
                return Err(AudioError::OutOfRange { index, value });
            }
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a clip from arbitrary samples, clamping into `[-1, 1]` and
    /// mapping non-finite values to zero.
    pub fn from_samples_clamped(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        let samples = samples
            .into_iter()
            .map(|s| if s.is_finite() { s.clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(alloc::vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &s| f64::max(m, math::abs(s)))
    }

    /// Linear-interpolation resampling to `target_rate`.
    pub fn resample(&self, target_rate: u32) -> Result<AudioClip, AudioError> {
        if target_rate == 0 {
            return Err(AudioError::InvalidSampleRate);
        }
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let out_len = math::round(self.samples.len() as f64 / ratio) as usize;
        let samples = dsp::resample_linear(&self.samples, ratio, out_len);
        Ok(AudioClip {
            samples,
            sample_rate: target_rate,
        })
    }

    /// Concatenates `other` after `self`. Both clips must share a sample rate.
    pub fn concat(&self, other: &AudioClip) -> Option<AudioClip> {
        if self.sample_rate != other.sample_rate {
            return None;
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Some(AudioClip {
            samples,
            sample_rate: self.sample_rate,
        })
    }

    /// Stable content hash (CRC-32 over the sample bits and the rate), used
    /// to key fixture transcripts and deduplicate audio.
    pub fn fingerprint(&self) -> u32 {
        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&self.sample_rate.to_le_bytes());
        for s in &self.samples {
            hasher.update(&s.to_bits().to_le_bytes());
        }
        hasher.finalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert_eq!(
            AudioClip::new(vec![0.0, 1.5], 16_000),
            Err(AudioError::OutOfRange {
                index: 1,
                value: 1.5
            })
        );
        assert_eq!(
            AudioClip::new(vec![f64::NAN], 16_000),
            Err(AudioError::NonFinite { index: 0 })
        );
        assert_eq!(AudioClip::new(vec![], 0), Err(AudioError::InvalidSampleRate));
    }

    #[test]
    fn duration_and_peak() {
        let clip = AudioClip::new(vec![0.0, -0.5, 0.25, 0.0], 4).unwrap();
        assert_eq!(clip.duration_seconds(), 1.0);
        assert_eq!(clip.peak(), 0.5);
    }

    #[test]
    fn resample_halves_length() {
        let clip = AudioClip::new(vec![0.1; 32_000], 32_000).unwrap();
        let out = clip.resample(16_000).unwrap();
        assert_eq!(out.len(), 16_000);
        assert_eq!(out.sample_rate(), 16_000);
        assert!(out.samples().iter().all(|&s| (s - 0.1).abs() < 1e-12));
    }

    #[test]
    fn fingerprint_depends_on_content() {
        let a = AudioClip::new(vec![0.1, 0.2], 16_000).unwrap();
        let b = AudioClip::new(vec![0.1, 0.3], 16_000).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
