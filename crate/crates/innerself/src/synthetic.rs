//! Speech-like test signals.
//!
//! A harmonic source with a moving pitch contour is shaped by vowel
//! formants and gated into syllables, with a short noise burst at each
//! onset. The signal is not intelligible, but pitch, loudness, tempo and
//! brightness behave the way the acoustic features expect, which is enough
//! to exercise the reference pipeline and to calibrate its classifier head.

use innerself_core::emotion::EmotionLabel;
use innerself_core::{AudioClip, CANONICAL_SAMPLE_RATE};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// (F1, F2, F3) in Hz for a few vowels.
const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [530.0, 1840.0, 2480.0],
    [270.0, 2290.0, 3010.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
];
const FORMANT_WIDTH_HZ: f64 = 120.0;
const MAX_HARMONIC_HZ: f64 = 7000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoiceStyle {
    pub f0_hz: f64,
    /// Slow pitch swing as a fraction of `f0_hz`.
    pub f0_swing: f64,
    /// Random per-syllable pitch offset as a fraction of `f0_hz`.
    pub f0_jitter: f64,
    pub syllables_per_second: f64,
    /// Fraction of each syllable slot that is voiced.
    pub duty: f64,
    /// Peak amplitude of the rendered clip.
    pub peak: f64,
    /// Harmonic roll-off exponent; smaller is brighter.
    pub tilt: f64,
    /// Onset noise level relative to the voiced part.
    pub noise: f64,
    /// Syllables per phrase; a pause of two slots follows each phrase.
    pub phrase_len: usize,
}

impl VoiceStyle {
    /// Prototype delivery for each emotion category.
    pub fn preset(label: EmotionLabel) -> Self {
        match label {
            EmotionLabel::Anger => Self {
                f0_hz: 210.0,
                f0_swing: 0.25,
                f0_jitter: 0.12,
                syllables_per_second: 5.0,
                duty: 0.8,
                peak: 0.85,
                tilt: 0.6,
                noise: 0.35,
                phrase_len: 8,
            },
            EmotionLabel::Anxiety => Self {
                f0_hz: 250.0,
                f0_swing: 0.15,
                f0_jitter: 0.08,
                syllables_per_second: 7.0,
                duty: 0.6,
                peak: 0.45,
                tilt: 0.9,
                noise: 0.25,
                phrase_len: 10,
            },
            EmotionLabel::Sadness => Self {
                f0_hz: 115.0,
                f0_swing: 0.04,
                f0_jitter: 0.02,
                syllables_per_second: 2.5,
                duty: 0.85,
                peak: 0.15,
                tilt: 1.8,
                noise: 0.05,
                phrase_len: 4,
            },
            EmotionLabel::ShameRegret => Self {
                f0_hz: 150.0,
                f0_swing: 0.06,
                f0_jitter: 0.03,
                syllables_per_second: 3.2,
                duty: 0.5,
                peak: 0.08,
                tilt: 1.4,
                noise: 0.15,
                phrase_len: 3,
            },
            EmotionLabel::Neutral => Self {
                f0_hz: 140.0,
                f0_swing: 0.1,
                f0_jitter: 0.04,
                syllables_per_second: 4.0,
                duty: 0.7,
                peak: 0.35,
                tilt: 1.1,
                noise: 0.12,
                phrase_len: 6,
            },
        }
    }

    /// Calm read speech for enrollment recordings.
    pub fn reading() -> Self {
        Self {
            phrase_len: 12,
            ..Self::preset(EmotionLabel::Neutral)
        }
    }

    /// A random variation around `self` for calibration data.
    pub fn perturbed(&self, rng: &mut impl Rng) -> Self {
        let mut jiggle = |v: f64, spread: f64| v * (1.0 + rng.gen_range(-spread..spread));
        Self {
            f0_hz: jiggle(self.f0_hz, 0.12),
            f0_swing: jiggle(self.f0_swing, 0.3),
            f0_jitter: jiggle(self.f0_jitter, 0.3),
            syllables_per_second: jiggle(self.syllables_per_second, 0.15),
            duty: jiggle(self.duty, 0.1).min(0.95),
            peak: jiggle(self.peak, 0.3).min(0.99),
            tilt: jiggle(self.tilt, 0.15),
            noise: jiggle(self.noise, 0.3),
            phrase_len: self.phrase_len,
        }
    }
}

fn formant_gain(freq: f64, vowel: &[f64; 3]) -> f64 {
    vowel
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let d = (freq - f) / FORMANT_WIDTH_HZ;
            (-0.5 * d * d).exp() / (1.0 + i as f64)
        })
        .sum::<f64>()
        + 0.05
}

/// Renders `seconds` of speech-like audio at 16 kHz. The same style, length
/// and seed always give the same samples.
pub fn render_speech(style: &VoiceStyle, seconds: f64, seed: u64) -> AudioClip {
    let sr = CANONICAL_SAMPLE_RATE as f64;
    let n = (seconds * sr).round() as usize;
    let mut rng = StdRng::seed_from_u64(seed);
    let slot = (sr / style.syllables_per_second).round().max(1.0) as usize;
    let voiced_len = ((slot as f64) * style.duty) as usize;
    let onset_len = (0.03 * sr) as usize;
    let swing_phase = rng.gen_range(0.0..std::f64::consts::TAU);

    let mut out = vec![0.0; n];
    let mut phase = 0.0f64;
    let mut start = (0.1 * sr) as usize;
    let mut syllable = 0usize;
    while start < n {
        if syllable > 0 && syllable % style.phrase_len.max(1) == 0 {
            start += 2 * slot;
        }
        let vowel = VOWELS[rng.gen_range(0..VOWELS.len())];
        let offset = rng.gen_range(-1.0..1.0) * style.f0_jitter;
        let len = voiced_len.min(n.saturating_sub(start));
        for i in 0..len {
            let t = (start + i) as f64 / sr;
            let f0 = style.f0_hz
                * (1.0 + offset + style.f0_swing * (std::f64::consts::TAU * 0.6 * t + swing_phase).sin());
            phase += std::f64::consts::TAU * f0 / sr;
            let env = (std::f64::consts::PI * i as f64 / len as f64).sin();
            let mut v = 0.0;
            let harmonics = (MAX_HARMONIC_HZ / f0) as usize;
            for k in 1..=harmonics {
                let f = k as f64 * f0;
                v += formant_gain(f, &vowel) * (k as f64).powf(-style.tilt) * (k as f64 * phase).sin();
            }
            out[start + i] += env * v;
        }
        for i in 0..onset_len.min(n.saturating_sub(start)) {
            let env = 1.0 - i as f64 / onset_len as f64;
            out[start + i] += style.noise * env * rng.gen_range(-1.0..1.0);
        }
        start += slot;
        syllable += 1;
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let g = style.peak / peak;
        out.iter_mut().for_each(|x| *x *= g);
    }
    AudioClip::new(out, CANONICAL_SAMPLE_RATE).expect("rendered samples are finite and within range")
}
