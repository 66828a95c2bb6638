use alloc::vec::Vec;

use super::encoder::VoiceProfile;
use super::mel::{hz_to_mel, MelParams, MelSpectrogram, LOG_FLOOR};
use super::VoiceError;
use crate::adapter::AdapterError;
use crate::conversation::ProsodyParams;
use crate::math;

/// Text plus speaker embedding to mel spectrogram.
pub trait Synthesizer {
    fn synthesize(
        &self,
        text: &str,
        profile: &VoiceProfile,
        prosody: &ProsodyParams,
    ) -> Result<MelSpectrogram, AdapterError>;
}

pub fn synthesize(
    text: &str,
    profile: &VoiceProfile,
    prosody: &ProsodyParams,
    synth: &dyn Synthesizer,
) -> Result<MelSpectrogram, VoiceError> {
    if text.trim().is_empty() {
        return Err(VoiceError::EmptyText);
    }
    Ok(synth.synthesize(text, profile, prosody)?)
}

pub const FRAMES_PER_CHAR: usize = 5;

/// Relative loudness across the frames of one character.
const CHAR_ENVELOPE: [f64; FRAMES_PER_CHAR] = [0.6, 1.0, 1.0, 0.8, 0.5];

/// Log-power of a fully excited bin, before the speaker envelope.
const PEAK_LOG_POWER: f64 = 2.0;
const QUIET_LOG_POWER: f64 = -12.0;

/// Formant-like mel templates, [`FRAMES_PER_CHAR`] frames per character.
///
/// Vowels get two Gaussian bumps at textbook F1/F2 positions over a voiced
/// low band, other letters and digits a broad band whose centre depends on
/// the letter, everything else silence. The speaker embedding tilts every
/// bin, so distinct profiles give distinct spectra. Prosody is ignored here
/// and applied to the waveform instead.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceSynthesizer {
    pub params: MelParams,
}

fn formants(c: char) -> Option<(f64, f64)> {
    match c {
        'a' => Some((730.0, 1090.0)),
        'e' => Some((530.0, 1840.0)),
        'i' | 'y' => Some((270.0, 2290.0)),
        'o' => Some((570.0, 840.0)),
        'u' => Some((300.0, 870.0)),
        _ => None,
    }
}

fn bump(x: f64, centre: f64, width: f64) -> f64 {
    let z = (x - centre) / width;
    math::exp(-0.5 * z * z)
}

impl ReferenceSynthesizer {
    /// Fractional mel bin whose filter peaks at `hz`.
    fn bin_of(&self, hz: f64) -> f64 {
        let p = &self.params;
        let lo = hz_to_mel(p.f_min);
        let hi = hz_to_mel(p.f_max);
        (hz_to_mel(hz) - lo) / (hi - lo) * (p.n_mels + 1) as f64 - 1.0
    }

    /// Excitation in [0, 1] per mel bin for one character, or `None` for
    /// silence.
    fn template(&self, c: char) -> Option<Vec<f64>> {
        let m = self.params.n_mels;
        let lower = c.to_lowercase().next().unwrap_or(c);
        if let Some((f1, f2)) = formants(lower) {
            let (b1, b2, voice) = (self.bin_of(f1), self.bin_of(f2), self.bin_of(150.0));
            return Some(
                (0..m)
                    .map(|i| {
                        let x = i as f64;
                        (bump(x, b1, 2.0) + 0.8 * bump(x, b2, 2.5) + 0.5 * bump(x, voice, 1.5)).min(1.0)
                    })
                    .collect(),
            );
        }
        if lower.is_alphanumeric() {
            let code = lower as u32;
            let centre = m as f64 * (0.45 + 0.4 * ((code * 7) % 23) as f64 / 23.0);
            return Some(
                (0..m)
                    .map(|i| 0.6 * bump(i as f64, centre, m as f64 / 10.0))
                    .collect(),
            );
        }
        None
    }
}

impl Synthesizer for ReferenceSynthesizer {
    fn synthesize(
        &self,
        text: &str,
        profile: &VoiceProfile,
        _prosody: &ProsodyParams,
    ) -> Result<MelSpectrogram, AdapterError> {
        let m = self.params.n_mels;
        let e = profile.embedding();
        let tilt: Vec<f64> = (0..m)
            .map(|i| 2.0 * math::tanh(10.0 * (e[i % e.len()] + e[(i + m) % e.len()])))
            .collect();
        let chars = text.chars().count();
        let mut data = Vec::with_capacity(chars * FRAMES_PER_CHAR * m);
        for c in text.chars() {
            let template = self.template(c);
            for gain in CHAR_ENVELOPE {
                match &template {
                    Some(t) => data.extend(t.iter().zip(&tilt).map(|(x, g)| {
                        let v = QUIET_LOG_POWER + (PEAK_LOG_POWER - QUIET_LOG_POWER) * x * gain + g;
                        v.max(LOG_FLOOR)
                    })),
                    None => data.extend(core::iter::repeat(LOG_FLOOR).take(m)),
                }
            }
        }
        MelSpectrogram::new(self.params, chars * FRAMES_PER_CHAR, data)
            .map_err(|err| AdapterError::protocol("reference-synthesizer", alloc::format!("{err}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voice::EMBEDDING_DIM;
    use alloc::string::String;
    use alloc::vec;

    fn profile(seed: usize) -> VoiceProfile {
        let mut e = vec![0.0; EMBEDDING_DIM];
        for (i, x) in e.iter_mut().enumerate() {
            *x = math::sin((i * (seed + 1)) as f64);
        }
        let n = math::sqrt(e.iter().map(|x| x * x).sum());
        e.iter_mut().for_each(|x| *x /= n);
        VoiceProfile::new(e, 1, String::from("t")).unwrap()
    }

    #[test]
    fn five_frames_per_character() {
        let s = ReferenceSynthesizer::default();
        let one = synthesize("a", &profile(0), &ProsodyParams::NEUTRAL, &s).unwrap();
        let two = synthesize("aa", &profile(0), &ProsodyParams::NEUTRAL, &s).unwrap();
        assert_eq!(one.n_frames(), 5);
        assert_eq!(two.n_frames(), 2 * one.n_frames());
    }

    #[test]
    fn profile_changes_the_spectrum() {
        let s = ReferenceSynthesizer::default();
        let a = synthesize("hello", &profile(0), &ProsodyParams::NEUTRAL, &s).unwrap();
        let b = synthesize("hello", &profile(1), &ProsodyParams::NEUTRAL, &s).unwrap();
        let max_diff = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(max_diff > 1e-9);
    }

    #[test]
    fn empty_text() {
        let s = ReferenceSynthesizer::default();
        assert_eq!(
            synthesize("", &profile(0), &ProsodyParams::NEUTRAL, &s),
            Err(VoiceError::EmptyText)
        );
    }

    #[test]
    fn deterministic() {
        let s = ReferenceSynthesizer::default();
        let a = synthesize("I can.", &profile(2), &ProsodyParams::NEUTRAL, &s).unwrap();
        let b = synthesize("I can.", &profile(2), &ProsodyParams::NEUTRAL, &s).unwrap();
        assert_eq!(a, b);
    }
}
