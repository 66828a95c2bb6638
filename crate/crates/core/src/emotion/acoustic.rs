//! Reference acoustic features.
//!
//! Layout of the 8-dimensional vector:
//!
//! | idx | feature |
//! |-----|---------|
//! | 0 | RMS energy over the whole clip |
//! | 1 | variance of per-frame RMS |
//! | 2 | zero-crossing rate (circular, crossings per sample) |
//! | 3 | mean F0 over voiced frames, Hz |
//! | 4 | F0 variance, Hz² |
//! | 5 | F0 range (max - min), Hz |
//! | 6 | speaking-rate proxy: active-segment onsets per second |
//! | 7 | mean spectral centroid of active frames, Hz |
//!
//! Frames are 40 ms long with a 20 ms hop. A frame is active when its energy
//! is at least 10% of the loudest frame, and voiced when it is active and its
//! best normalized autocorrelation in the 60-500 Hz pitch range reaches 0.5.
//! Every threshold is relative, so scaling the signal by a constant moves
//! only the RMS features.

use alloc::vec::Vec;

use super::features::{AdapterDescriptor, FeatureVector, Modality};
use super::EmotionError;
use crate::audio::AudioClip;
use crate::dsp;
use crate::math;

pub const AUDIO_FEATURE_DIM: usize = 8;

pub const AUDIO_FEATURE_NAMES: [&str; AUDIO_FEATURE_DIM] = [
    "rms_mean",
    "rms_variance",
    "zero_crossing_rate",
    "f0_mean",
    "f0_variance",
    "f0_range",
    "speaking_rate",
    "spectral_centroid_mean",
];

/// Shortest clip the extractors accept, in seconds.
pub const MIN_CLIP_SECONDS: f64 = 0.2;
/// Clips whose peak stays below this are treated as silence.
pub const SILENCE_PEAK: f64 = 1e-4;

const FRAME_SECONDS: f64 = 0.04;
const HOP_SECONDS: f64 = 0.02;
const ACTIVE_ENERGY_RATIO: f64 = 0.1;
const VOICING_THRESHOLD: f64 = 0.5;
const F0_MIN_HZ: f64 = 60.0;
const F0_MAX_HZ: f64 = 500.0;
// Among autocorrelation peaks within this fraction of the best one, the
// shortest lag wins; this keeps period doubling out of the estimate.
const PEAK_TOLERANCE: f64 = 0.9;

/// Source of the audio half of the fused feature vector.
pub trait AudioFeatureExtractor {
    fn descriptor(&self) -> AdapterDescriptor;
    fn extract(&self, clip: &AudioClip) -> Result<FeatureVector, EmotionError>;
}

/// Deterministic signal-statistics extractor; see the module docs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceAudioFeatures;

impl AudioFeatureExtractor for ReferenceAudioFeatures {
    fn descriptor(&self) -> AdapterDescriptor {
        AdapterDescriptor {
            name: "reference".into(),
            feature_dim: AUDIO_FEATURE_DIM,
            endpoint: None,
        }
    }

    fn extract(&self, clip: &AudioClip) -> Result<FeatureVector, EmotionError> {
        extract_audio_features(clip)
    }
}

pub fn extract_audio_features(clip: &AudioClip) -> Result<FeatureVector, EmotionError> {
    let duration = clip.duration_seconds();
    if duration < MIN_CLIP_SECONDS {
        return Err(EmotionError::ClipTooShort { duration });
    }
    let peak = clip.peak();
    if peak < SILENCE_PEAK {
        return Err(EmotionError::SilentClip { peak });
    }

    let x = clip.samples();
    let sr = clip.sample_rate() as f64;
    let n = x.len();

    let rms_mean = math::sqrt(x.iter().map(|s| s * s).sum::<f64>() / n as f64);

    let mut crossings = 0usize;
    for i in 0..n {
        let a = x[i];
        let b = x[(i + 1) % n];
        if (a >= 0.0) != (b >= 0.0) {
            crossings += 1;
        }
    }
    let zcr = crossings as f64 / n as f64;

    let frame_len = (math::round(FRAME_SECONDS * sr) as usize).max(2);
    let hop = (math::round(HOP_SECONDS * sr) as usize).max(1);
    let frames: Vec<&[f64]> = if n >= frame_len {
        (0..=(n - frame_len) / hop)
            .map(|i| &x[i * hop..i * hop + frame_len])
            .collect()
    } else {
        alloc::vec![x]
    };

    let energies: Vec<f64> = frames
        .iter()
        .map(|f| f.iter().map(|s| s * s).sum::<f64>() / f.len() as f64)
        .collect();
    let frame_rms: Vec<f64> = energies.iter().map(|&e| math::sqrt(e)).collect();
    let rms_variance = variance(&frame_rms);

    let max_energy = energies.iter().cloned().fold(0.0, f64::max);
    let active: Vec<bool> = energies
        .iter()
        .map(|&e| max_energy > 0.0 && e >= ACTIVE_ENERGY_RATIO * max_energy)
        .collect();

    let min_lag = (math::floor(sr / F0_MAX_HZ) as usize).max(2);
    let max_lag = (math::floor(sr / F0_MIN_HZ) as usize).min(frame_len.saturating_sub(2));
    let mut f0s = Vec::new();
    if max_lag > min_lag {
        for (frame, _) in frames.iter().zip(&active).filter(|(_, &a)| a) {
            if let Some(period) = estimate_period(frame, min_lag, max_lag) {
                f0s.push(sr / period);
            }
        }
    }
    let (f0_mean, f0_variance, f0_range) = if f0s.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let max = f0s.iter().cloned().fold(f64::MIN, f64::max);
        let min = f0s.iter().cloned().fold(f64::MAX, f64::min);
        (mean(&f0s), variance(&f0s), max - min)
    };

    let onsets = active
        .iter()
        .enumerate()
        .filter(|&(i, &a)| a && (i == 0 || !active[i - 1]))
        .count();
    let speaking_rate = onsets as f64 / duration;

    let n_fft = frame_len.next_power_of_two();
    let window = dsp::hann(frame_len);
    let mut centroids = Vec::new();
    for (frame, _) in frames.iter().zip(&active).filter(|(_, &a)| a) {
        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(s, w)| s * w).collect();
        let power = dsp::power_spectrum(&windowed, n_fft);
        let total: f64 = power.iter().sum();
        if total > 0.0 {
            let weighted: f64 = power
                .iter()
                .enumerate()
                .map(|(k, p)| k as f64 * sr / n_fft as f64 * p)
                .sum();
            centroids.push(weighted / total);
        }
    }
    let centroid_mean = if centroids.is_empty() {
        0.0
    } else {
        mean(&centroids)
    };

    FeatureVector::new(
        alloc::vec![
            rms_mean,
            rms_variance,
            zcr,
            f0_mean,
            f0_variance,
            f0_range,
            speaking_rate,
            centroid_mean,
        ],
        Modality::Audio,
    )
}

/// Pitch period in samples (fractional, parabolic refinement), or `None`
/// when the frame is not voiced.
fn estimate_period(frame: &[f64], min_lag: usize, max_lag: usize) -> Option<f64> {
    let lo = min_lag - 1;
    let hi = max_lag + 1;
    let r: Vec<f64> = (lo..=hi).map(|lag| normalized_autocorr(frame, lag)).collect();
    let at = |lag: usize| r[lag - lo];

    let best = (min_lag..=max_lag).map(at).fold(f64::MIN, f64::max);
    if best < VOICING_THRESHOLD {
        return None;
    }
    let chosen = (min_lag..=max_lag)
        .find(|&lag| {
            let v = at(lag);
            v >= PEAK_TOLERANCE * best && v >= at(lag - 1) && v >= at(lag + 1)
        })
        .unwrap_or_else(|| {
            (min_lag..=max_lag)
                .max_by(|&a, &b| at(a).total_cmp(&at(b)))
                .expect("non-empty lag range")
        });

    let (left, mid, right) = (at(chosen - 1), at(chosen), at(chosen + 1));
    let denom = left - 2.0 * mid + right;
    let offset = if denom < 0.0 {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(chosen as f64 + offset)
}

fn normalized_autocorr(frame: &[f64], lag: usize) -> f64 {
    if lag >= frame.len() {
        return 0.0;
    }
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..frame.len() - lag {
        let a = frame[i];
        let b = frame[i + lag];
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let denom = math::sqrt(xx * yy);
    if denom > 0.0 {
        xy / denom
    } else {
        0.0
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const SR: u32 = 16_000;

    fn sine(freq: f64, amp: f64, seconds: f64) -> AudioClip {
        let n = (seconds * SR as f64) as usize;
        let samples = (0..n)
            .map(|i| amp * libm::sin(2.0 * core::f64::consts::PI * freq * i as f64 / SR as f64))
            .collect();
        AudioClip::new(samples, SR).unwrap()
    }

    /// Independent pitch oracle: lag maximizing the raw autocorrelation of
    /// the whole signal over the same pitch range.
    fn autocorrelation_oracle_hz(x: &[f64]) -> f64 {
        let min_lag = (SR as f64 / F0_MAX_HZ) as usize;
        let max_lag = (SR as f64 / F0_MIN_HZ) as usize;
        let best = (min_lag..=max_lag)
            .max_by(|&a, &b| {
                let ra: f64 = (0..x.len() - a).map(|i| x[i] * x[i + a]).sum();
                let rb: f64 = (0..x.len() - b).map(|i| x[i] * x[i + b]).sum();
                ra.total_cmp(&rb)
            })
            .unwrap();
        SR as f64 / best as f64
    }

    #[test]
    fn silence_is_rejected() {
        let clip = AudioClip::silence(16_000, SR).unwrap();
        assert!(matches!(
            extract_audio_features(&clip),
            Err(EmotionError::SilentClip { .. })
        ));
    }

    #[test]
    fn short_clip_is_rejected() {
        let clip = sine(220.0, 0.5, 0.19);
        assert!(matches!(
            extract_audio_features(&clip),
            Err(EmotionError::ClipTooShort { .. })
        ));
    }

    #[test]
    fn sine_pitch_matches_autocorrelation_oracle() {
        let clip = sine(220.0, 0.5, 1.0);
        let oracle = autocorrelation_oracle_hz(clip.samples());
        assert!((oracle - 220.0).abs() <= 5.0, "oracle {oracle}");
        let f = extract_audio_features(&clip).unwrap();
        let f0 = f.values()[3];
        assert!((f0 - 220.0).abs() <= 5.0, "f0 {f0}");
        assert!((f0 - oracle).abs() <= 5.0);
        assert_eq!(f.dimension(), AUDIO_FEATURE_DIM);
    }

    #[test]
    fn self_concatenation_preserves_rms_and_zcr() {
        let clip = sine(173.0, 0.3, 0.7);
        let twice = clip.concat(&clip).unwrap();
        let a = extract_audio_features(&clip).unwrap();
        let b = extract_audio_features(&twice).unwrap();
        assert!((a.values()[0] - b.values()[0]).abs() < 1e-9);
        assert!((a.values()[2] - b.values()[2]).abs() < 1e-9);
    }

    #[test]
    fn halving_amplitude_moves_only_rms_features() {
        let base: Vec<f64> = (0..16_000)
            .map(|i| {
                let t = i as f64 / SR as f64;
                let env = 0.5 + 0.4 * libm::sin(2.0 * core::f64::consts::PI * 3.0 * t);
                env * (0.6 * libm::sin(2.0 * core::f64::consts::PI * 150.0 * t)
                    + 0.3 * libm::sin(2.0 * core::f64::consts::PI * 450.0 * t))
            })
            .collect();
        let half: Vec<f64> = base.iter().map(|s| s * 0.5).collect();
        let a = extract_audio_features(&AudioClip::new(base, SR).unwrap()).unwrap();
        let b = extract_audio_features(&AudioClip::new(half, SR).unwrap()).unwrap();
        assert!((a.values()[0] - 2.0 * b.values()[0]).abs() < 1e-12);
        for idx in [2, 3, 4, 5] {
            assert!(
                (a.values()[idx] - b.values()[idx]).abs() < 1e-6,
                "feature {idx}: {} vs {}",
                a.values()[idx],
                b.values()[idx]
            );
        }
    }

    #[test]
    fn speaking_rate_counts_bursts() {
        // Four 100 ms bursts separated by silence over one second.
        let mut samples = vec![0.0; 16_000];
        for burst in 0..4 {
            let start = burst * 4_000;
            for i in start..start + 1_600 {
                samples[i] = 0.5 * libm::sin(2.0 * core::f64::consts::PI * 200.0 * i as f64 / 16_000.0);
            }
        }
        let f = extract_audio_features(&AudioClip::new(samples, SR).unwrap()).unwrap();
        assert!((f.values()[6] - 4.0).abs() < 1e-12, "rate {}", f.values()[6]);
    }
}
