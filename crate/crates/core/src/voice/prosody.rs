use alloc::vec;
use alloc::vec::Vec;

use crate::audio::AudioClip;
use crate::conversation::ProsodyParams;
use crate::dsp;
use crate::math;

const OLA_WINDOW: usize = 512;
const OLA_HOP: usize = OLA_WINDOW / 4;

/// Renders `prosody` onto a waveform: pitch shift, then rate, then gain.
///
/// Rate is plain linear-interpolation resampling to `round(len / rate)`
/// samples, so it moves pitch along with tempo. Pitch shift resamples by
/// `2^(semitones/12)` and then restores the length with windowed
/// overlap-add, which smears transients; it is a reference rendering, not a
/// production vocoder. Gain multiplies by `10^(dB/20)` and clips to [-1, 1].
pub fn apply_prosody(clip: &AudioClip, prosody: &ProsodyParams) -> AudioClip {
    if prosody.is_identity() || clip.is_empty() {
        return clip.clone();
    }
    let mut samples: Vec<f64> = clip.samples().to_vec();

    if prosody.pitch_shift != 0.0 {
        let n = samples.len();
        let factor = math::powf(2.0, prosody.pitch_shift / 12.0);
        let shifted_len = (math::round(n as f64 / factor) as usize).max(1);
        let shifted = dsp::resample_linear(&samples, factor, shifted_len);
        samples = time_stretch(&shifted, n);
    }

    if prosody.rate != 1.0 {
        let out_len = math::round(samples.len() as f64 / prosody.rate) as usize;
        samples = dsp::resample_linear(&samples, prosody.rate, out_len);
    }

    if prosody.volume_gain != 0.0 {
        let g = math::powf(10.0, prosody.volume_gain / 20.0);
        samples.iter_mut().for_each(|x| *x *= g);
    }

    AudioClip::from_samples_clamped(samples, clip.sample_rate())
        .expect("sample rate comes from a valid clip")
}

/// Overlap-add stretch of `input` to exactly `target` samples without
/// resampling the content.
fn time_stretch(input: &[f64], target: usize) -> Vec<f64> {
    if input.len() < OLA_WINDOW || target < OLA_WINDOW {
        let step = input.len() as f64 / target as f64;
        return dsp::resample_linear(input, step, target);
    }
    let window = dsp::hann(OLA_WINDOW);
    let frames = (target - OLA_WINDOW).div_ceil(OLA_HOP) + 1;
    let analysis_hop = if frames > 1 {
        (input.len() - OLA_WINDOW) as f64 / (frames - 1) as f64
    } else {
        0.0
    };
    let mut out = vec![0.0; (frames - 1) * OLA_HOP + OLA_WINDOW];
    let mut norm = vec![0.0; out.len()];
    for k in 0..frames {
        let src = math::round(k as f64 * analysis_hop) as usize;
        let dst = k * OLA_HOP;
        for i in 0..OLA_WINDOW {
            let x = input.get(src + i).copied().unwrap_or(0.0);
            out[dst + i] += x * window[i];
            norm[dst + i] += window[i];
        }
    }
    for (y, w) in out.iter_mut().zip(&norm) {
        *y = if *w > 1e-3 { *y / w } else { 0.0 };
    }
    out.truncate(target);
    out
}
