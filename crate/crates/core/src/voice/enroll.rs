use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::lexicon;
use crate::math;

/// One problem found in an enrollment sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnrollmentIssue {
    TooShort { duration: f64 },
    TooLong { duration: f64 },
    TooQuiet { peak: f64 },
    EmptyTranscript,
    InconsistentTranscript { voiced_seconds: f64, expected_seconds: f64 },
}

impl EnrollmentIssue {
    pub fn code(&self) -> &'static str {
        match self {
            EnrollmentIssue::TooShort { .. } => "TooShort",
            EnrollmentIssue::TooLong { .. } => "TooLong",
            EnrollmentIssue::TooQuiet { .. } => "TooQuiet",
            EnrollmentIssue::EmptyTranscript => "EmptyTranscript",
            EnrollmentIssue::InconsistentTranscript { .. } => "InconsistentTranscript",
        }
    }
}

/// Thresholds for accepting an enrollment recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrollmentRules {
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub min_peak: f64,
    /// Expected speaking time per transcript word.
    pub seconds_per_word: f64,
    /// Allowed ratio between voiced time and expected time, either way.
    pub consistency_factor: f64,
}

impl Default for EnrollmentRules {
    fn default() -> Self {
        Self {
            min_seconds: 1.0,
            max_seconds: 30.0,
            min_peak: 0.01,
            seconds_per_word: 0.4,
            consistency_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrollmentSample {
    pub clip: AudioClip,
    pub transcript: String,
    pub validated: bool,
}

impl EnrollmentSample {
    pub fn new(clip: AudioClip, transcript: impl Into<String>) -> Self {
        Self {
            clip,
            transcript: transcript.into(),
            validated: false,
        }
    }
}

const VAD_FRAME_SECONDS: f64 = 0.02;
const VAD_RELATIVE_THRESHOLD: f64 = 0.1;

/// Seconds of `clip` spent in 20 ms frames whose RMS is at least a tenth of
/// the loudest frame's.
pub fn voiced_seconds(clip: &AudioClip) -> f64 {
    let frame = ((clip.sample_rate() as f64 * VAD_FRAME_SECONDS) as usize).max(1);
    let rms: Vec<f64> = clip
        .samples()
        .chunks(frame)
        .map(|c| math::sqrt(c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64))
        .collect();
    let loudest = rms.iter().cloned().fold(0.0, f64::max);
    if loudest <= 0.0 {
        return 0.0;
    }
    let threshold = loudest * VAD_RELATIVE_THRESHOLD;
    let voiced_samples: usize = clip
        .samples()
        .chunks(frame)
        .zip(&rms)
        .filter(|(_, r)| **r >= threshold)
        .map(|(c, _)| c.len())
        .sum();
    voiced_samples as f64 / clip.sample_rate() as f64
}

/// Checks a sample against `rules`, reporting every failed check.
pub fn validate_enrollment(
    sample: EnrollmentSample,
    rules: &EnrollmentRules,
) -> Result<EnrollmentSample, Vec<EnrollmentIssue>> {
    let mut issues = Vec::new();
    let duration = sample.clip.duration_seconds();
    if duration < rules.min_seconds {
        issues.push(EnrollmentIssue::TooShort { duration });
    }
    if duration > rules.max_seconds {
        issues.push(EnrollmentIssue::TooLong { duration });
    }
    let peak = sample.clip.peak();
    if peak < rules.min_peak {
        issues.push(EnrollmentIssue::TooQuiet { peak });
    }
    let words = lexicon::tokenize(&sample.transcript).len();
    if words == 0 {
        issues.push(EnrollmentIssue::EmptyTranscript);
    } else if peak > 0.0 {
        let expected_seconds = words as f64 * rules.seconds_per_word;
        let voiced = voiced_seconds(&sample.clip);
        let factor = rules.consistency_factor;
        if voiced > expected_seconds * factor || voiced * factor < expected_seconds {
            issues.push(EnrollmentIssue::InconsistentTranscript {
                voiced_seconds: voiced,
                expected_seconds,
            });
        }
    }
    if issues.is_empty() {
        Ok(EnrollmentSample {
            validated: true,
            ..sample
        })
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// Alternating 300 ms tone bursts and 100 ms pauses.
    fn speechlike(seconds: f64) -> AudioClip {
        let len = (seconds * 16_000.0) as usize;
        let s = (0..len)
            .map(|n| {
                let t = n as f64 / 16_000.0;
                if (t % 0.4) < 0.3 {
                    0.5 * math::sin(2.0 * PI * 180.0 * t)
                } else {
                    0.0
                }
            })
            .collect();
        AudioClip::new(s, 16_000).unwrap()
    }

    fn codes(r: Result<EnrollmentSample, Vec<EnrollmentIssue>>) -> Vec<&'static str> {
        r.err().unwrap_or_default().iter().map(EnrollmentIssue::code).collect()
    }

    #[test]
    fn five_seconds_twelve_words_is_valid() {
        let s = EnrollmentSample::new(
            speechlike(5.0),
            "the quick brown fox jumps over the lazy dog near the river",
        );
        let v = validate_enrollment(s, &EnrollmentRules::default()).unwrap();
        assert!(v.validated);
    }

    #[test]
    fn half_second_is_too_short() {
        let s = EnrollmentSample::new(speechlike(0.5), "hello");
        assert_eq!(codes(validate_enrollment(s, &EnrollmentRules::default())), ["TooShort"]);
    }

    #[test]
    fn ten_seconds_for_one_word_is_inconsistent() {
        let s = EnrollmentSample::new(speechlike(10.0), "hi");
        assert_eq!(
            codes(validate_enrollment(s, &EnrollmentRules::default())),
            ["InconsistentTranscript"]
        );
    }

    #[test]
    fn every_issue_is_listed() {
        let s = EnrollmentSample::new(AudioClip::silence(8000, 16_000).unwrap(), "  ");
        assert_eq!(
            codes(validate_enrollment(s, &EnrollmentRules::default())),
            ["TooShort", "TooQuiet", "EmptyTranscript"]
        );
        let long = EnrollmentSample::new(speechlike(31.0), "a ".repeat(70));
        assert_eq!(codes(validate_enrollment(long, &EnrollmentRules::default())), ["TooLong"]);
    }

    #[test]
    fn duration_bounds_are_inclusive() {
        let s = EnrollmentSample::new(speechlike(1.0), "one two");
        assert!(validate_enrollment(s, &EnrollmentRules::default()).is_ok());
    }
}
