//! WAV decoding and encoding. Anything hound can read is accepted and
//! converted to mono at the canonical rate; output is always 16-bit PCM.

use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use innerself_core::{AudioClip, AudioError, CANONICAL_SAMPLE_RATE};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed WAV: {0}")]
    Format(#[from] hound::Error),
    #[error("unsupported WAV layout: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Decodes WAV bytes into a mono clip at 16 kHz. Channels are averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    let mut reader = WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(WavError::Unsupported("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Int, bits @ 8..=32) => {
            let scale = ((1i64 << (bits - 1)) - 1) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()?
        }
        (format, bits) => {
            return Err(WavError::Unsupported(format!("{bits}-bit {format:?} samples")));
        }
    };
    let channels = spec.channels as usize;
    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    let clip = AudioClip::from_samples_clamped(mono, spec.sample_rate)?;
    if clip.sample_rate() == CANONICAL_SAMPLE_RATE {
        Ok(clip)
    } else {
        Ok(clip.resample(CANONICAL_SAMPLE_RATE)?)
    }
}

pub fn read_wav(path: &Path) -> Result<AudioClip, WavError> {
    let bytes = std::fs::read(path).map_err(|source| WavError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_wav(&bytes)
}

/// Encodes `clip` as mono 16-bit PCM at its own sample rate.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::with_capacity(44 + 2 * clip.len()));
    {
        let mut writer = WavWriter::new(&mut out, spec).expect("in-memory WAV header");
        for s in clip.samples() {
            let v = (s * i16::MAX as f64).round() as i16;
            writer.write_sample(v).expect("in-memory WAV write");
        }
        writer.finalize().expect("in-memory WAV finalize");
    }
    out.into_inner()
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> std::io::Result<()> {
    std::fs::write(path, encode_wav(clip))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_round_trip_is_stable() {
        let clip = AudioClip::new((0..1600).map(|i| ((i % 50) as f64 / 25.0) - 1.0).collect(), 16_000).unwrap();
        let once = decode_wav(&encode_wav(&clip)).unwrap();
        let twice = decode_wav(&encode_wav(&once)).unwrap();
        assert_eq!(once, twice);
        for (a, b) in clip.samples().iter().zip(once.samples()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn stereo_and_other_rates_are_normalized() {
        let spec = WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut buf = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut buf, spec).unwrap();
            for _ in 0..800 {
                w.write_sample(16000i16).unwrap();
                w.write_sample(0i16).unwrap();
            }
            w.finalize().unwrap();
        }
        let clip = decode_wav(&buf.into_inner()).unwrap();
        assert_eq!(clip.sample_rate(), 16_000);
        assert_eq!(clip.len(), 1600);
        assert!((clip.samples()[10] - 16000.0 / 32767.0 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(matches!(decode_wav(b"not a wav"), Err(WavError::Format(_))));
    }
}
