use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::VoiceError;
use crate::audio::AudioClip;
use crate::dsp;
use crate::math;

/// Power added before the logarithm; silence maps to `ln(1e-10)`.
pub const POWER_FLOOR: f64 = 1e-10;

/// `ln(POWER_FLOOR)`, the smallest possible mel entry.
pub const LOG_FLOOR: f64 = -23.025850929940457;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * math::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (math::powf(10.0, mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelParams {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: u32,
}

impl Default for MelParams {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 256,
            n_mels: 80,
            f_min: 0.0,
            f_max: 8000.0,
            sample_rate: 16_000,
        }
    }
}

impl MelParams {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frames produced for `len` samples; zero when `len < n_fft`.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            1 + (len - self.n_fft) / self.hop
        }
    }

    pub fn validate(&self) -> Result<(), VoiceError> {
        let ok = self.n_fft.is_power_of_two()
            && self.n_fft >= 16
            && self.hop > 0
            && self.n_mels > 0
            && self.sample_rate > 0
            && self.f_min >= 0.0
            && self.f_min < self.f_max
            && self.f_max <= self.sample_rate as f64 / 2.0;
        if ok {
            Ok(())
        } else {
            Err(VoiceError::InvalidMel(alloc::format!("unusable mel parameters {self:?}")))
        }
    }
}

/// Triangular filters with `n_mels + 2` edge points spaced uniformly on the
/// mel scale between `f_min` and `f_max`. Filter `m` rises from edge `m` to
/// its peak at edge `m + 1` and falls to zero at edge `m + 2`, evaluated at
/// each FFT bin's exact frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    params: MelParams,
    edges_hz: Vec<f64>,
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(params: MelParams) -> Result<Self, VoiceError> {
        params.validate()?;
        let m = params.n_mels;
        let lo = hz_to_mel(params.f_min);
        let hi = hz_to_mel(params.f_max);
        let edges_hz: Vec<f64> = (0..m + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (m + 1) as f64))
            .collect();
        let n_bins = params.n_bins();
        let bin_hz = params.sample_rate as f64 / params.n_fft as f64;
        let mut weights = vec![0.0; m * n_bins];
        for row in 0..m {
            let (l, c, r) = (edges_hz[row], edges_hz[row + 1], edges_hz[row + 2]);
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f > l && f <= c {
                    (f - l) / (c - l)
                } else if f > c && f < r {
                    (r - f) / (r - c)
                } else {
                    0.0
                };
                weights[row * n_bins + k] = w;
            }
        }
        Ok(Self {
            params,
            edges_hz,
            weights,
        })
    }

    pub fn params(&self) -> &MelParams {
        &self.params
    }

    /// Peak frequency of each filter.
    pub fn center_frequencies(&self) -> &[f64] {
        &self.edges_hz[1..self.params.n_mels + 1]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.params.n_bins();
        &self.weights[m * n..(m + 1) * n]
    }

    /// Filter energies for one power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.params.n_mels)
            .map(|m| self.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }

    pub fn compute(&self, clip: &AudioClip) -> Result<MelSpectrogram, VoiceError> {
        let p = &self.params;
        let resampled;
        let samples = if clip.sample_rate() == p.sample_rate {
            clip.samples()
        } else {
            resampled = clip.resample(p.sample_rate).map_err(VoiceError::Audio)?;
            resampled.samples()
        };
        let frames = p.frame_count(samples.len());
        if frames == 0 {
            return Err(VoiceError::ClipTooShort {
                len: samples.len(),
                n_fft: p.n_fft,
            });
        }
        let window = dsp::hann(p.n_fft);
        let mut data = Vec::with_capacity(frames * p.n_mels);
        let mut frame = vec![0.0; p.n_fft];
        for t in 0..frames {
            let start = t * p.hop;
            for (dst, (x, w)) in frame
                .iter_mut()
                .zip(samples[start..start + p.n_fft].iter().zip(&window))
            {
                *dst = x * w;
            }
            let power = dsp::power_spectrum(&frame, p.n_fft);
            data.extend(self.apply(&power).into_iter().map(|e| math::ln(e + POWER_FLOOR)));
        }
        MelSpectrogram::new(*p, frames, data)
    }
}

/// Log-power mel spectrogram, `n_frames × n_mels`, row-major by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSpectrogram {
    params: MelParams,
    n_frames: usize,
    data: Vec<f64>,
}

impl MelSpectrogram {
    pub fn new(params: MelParams, n_frames: usize, data: Vec<f64>) -> Result<Self, VoiceError> {
        if data.len() != n_frames * params.n_mels {
            return Err(VoiceError::InvalidMel(alloc::format!(
                "{} values for {n_frames} frames of {} mels",
                data.len(),
                params.n_mels
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < LOG_FLOOR - 1e-9) {
            return Err(VoiceError::InvalidMel(alloc::format!("entry {v} is not a valid log power")));
        }
        Ok(Self {
            params,
            n_frames,
            data,
        })
    }

    pub fn params(&self) -> &MelParams {
        &self.params
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_mels(&self) -> usize {
        self.params.n_mels
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let m = self.params.n_mels;
        &self.data[t * m..(t + 1) * m]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.params.n_mels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Mel bin with the most energy in frame `t`; ties go to the lower bin.
    pub fn argmax(&self, t: usize) -> usize {
        let mut best = 0;
        for (i, v) in self.frame(t).iter().enumerate() {
            if *v > self.frame(t)[best] {
                best = i;
            }
        }
        best
    }
}

/// Log-mel spectrogram of `clip`, resampled to `params.sample_rate` first
/// when needed.
pub fn compute_mel(clip: &AudioClip, params: &MelParams) -> Result<MelSpectrogram, VoiceError> {
    MelFilterbank::new(*params)?.compute(clip)
}
