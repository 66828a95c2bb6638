use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::mel::{MelFilterbank, MelSpectrogram, POWER_FLOOR};
use super::VoiceError;
use crate::adapter::AdapterError;
use crate::audio::AudioClip;
use crate::math;

/// Mel spectrogram to waveform.
pub trait Vocoder {
    fn vocode(&self, mel: &MelSpectrogram) -> Result<AudioClip, AdapterError>;
}

pub fn vocode(mel: &MelSpectrogram, vocoder: &dyn Vocoder) -> Result<AudioClip, VoiceError> {
    let clip = vocoder.vocode(mel)?;
    let expected = mel.n_frames() * mel.params().hop;
    if clip.len() != expected {
        return Err(VoiceError::Adapter(AdapterError::protocol(
            "vocoder",
            alloc::format!("returned {} samples, expected {expected}", clip.len()),
        )));
    }
    Ok(clip)
}

/// Output peak after normalization.
pub const VOCODER_PEAK: f64 = 0.9;

/// Sinusoid bank at the mel filter centres. Frame `t` drives each sinusoid
/// with amplitude `sqrt(exp(mel) - 1e-10)` under a triangular window of
/// half-width `hop` centred on `t·hop + hop/2`; neighbouring windows sum to
/// one. The result is peak-normalized to [`VOCODER_PEAK`] unless silent.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceVocoder;

impl Vocoder for ReferenceVocoder {
    fn vocode(&self, mel: &MelSpectrogram) -> Result<AudioClip, AdapterError> {
        let p = *mel.params();
        let fb = MelFilterbank::new(p)
            .map_err(|e| AdapterError::protocol("reference-vocoder", alloc::format!("{e}")))?;
        let hop = p.hop;
        let len = mel.n_frames() * hop;
        let sr = p.sample_rate as f64;
        let mut out = vec![0.0; len];

        // Per-bin phase increment as a unit complex rotation.
        let rot: Vec<(f64, f64)> = fb
            .center_frequencies()
            .iter()
            .map(|f| {
                let w = 2.0 * PI * f / sr;
                (math::cos(w), math::sin(w))
            })
            .collect();

        for (t, frame) in mel.frames().enumerate() {
            let centre = (t * hop) as f64 + hop as f64 / 2.0;
            let start = (centre - hop as f64).max(0.0) as usize;
            let end = ((centre + hop as f64) as usize).min(len);
            for (m, v) in frame.iter().enumerate() {
                let power = math::exp(*v) - POWER_FLOOR;
                // Entries at the floor decode to exactly nothing.
                if power <= POWER_FLOOR * 1e-6 {
                    continue;
                }
                let amp = math::sqrt(power);
                let w = 2.0 * PI * fb.center_frequencies()[m] / sr;
                let (c, s) = rot[m];
                let (mut re, mut im) = (math::cos(w * start as f64), math::sin(w * start as f64));
                for (n, y) in out.iter_mut().enumerate().take(end).skip(start) {
                    let tri = 1.0 - math::abs(n as f64 - centre) / hop as f64;
                    if tri > 0.0 {
                        *y += amp * tri * im;
                    }
                    let next_re = re * c - im * s;
                    im = re * s + im * c;
                    re = next_re;
                }
            }
        }

        let peak = out.iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
        if peak > 0.0 {
            let scale = VOCODER_PEAK / peak;
            out.iter_mut().for_each(|x| *x *= scale);
        }
        AudioClip::from_samples_clamped(out, p.sample_rate)
            .map_err(|e| AdapterError::protocol("reference-vocoder", alloc::format!("{e}")))
    }
}
