use alloc::collections::BTreeMap;
use alloc::string::String;

use super::acoustic::SILENCE_PEAK;
use super::EmotionError;
use crate::adapter::AdapterError;
use crate::audio::AudioClip;

pub trait SpeechToText {
    fn transcribe(&self, clip: &AudioClip) -> Result<String, AdapterError>;
}

/// Transcribes `clip` through `stt`. Silent clips short-circuit to
/// [`EmotionError::EmptyTranscript`] without touching the backend, and a
/// whitespace-only answer is reported the same way.
pub fn transcribe(clip: &AudioClip, stt: &dyn SpeechToText) -> Result<String, EmotionError> {
    if clip.is_empty() || clip.peak() < SILENCE_PEAK {
        return Err(EmotionError::EmptyTranscript);
    }
    let text = stt.transcribe(clip)?;
    if text.trim().is_empty() {
        return Err(EmotionError::EmptyTranscript);
    }
    Ok(text)
}

/// Mock backend that answers with the transcript registered for a clip's
/// content fingerprint, or an empty string for unknown clips.
#[derive(Debug, Clone, Default)]
pub struct FixtureSpeechToText {
    transcripts: BTreeMap<u32, String>,
}

impl FixtureSpeechToText {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, clip: &AudioClip, transcript: impl Into<String>) {
        self.transcripts.insert(clip.fingerprint(), transcript.into());
    }

    pub fn with(mut self, clip: &AudioClip, transcript: impl Into<String>) -> Self {
        self.register(clip, transcript);
        self
    }
}

impl SpeechToText for FixtureSpeechToText {
    fn transcribe(&self, clip: &AudioClip) -> Result<String, AdapterError> {
        Ok(self
            .transcripts
            .get(&clip.fingerprint())
            .cloned()
            .unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    struct Offline;

    impl SpeechToText for Offline {
        fn transcribe(&self, _: &AudioClip) -> Result<String, AdapterError> {
            Err(AdapterError::Unavailable {
                backend: "stt".into(),
                reason: "timeout".into(),
                retry_after_ms: Some(2_000),
            })
        }
    }

    fn tone() -> AudioClip {
        let samples: Vec<f64> = (0..4_000).map(|i| 0.3 * libm::sin(i as f64 * 0.1)).collect();
        AudioClip::new(samples, 16_000).unwrap()
    }

    #[test]
    fn mock_echoes_fixture_tag() {
        let clip = tone();
        let stt = FixtureSpeechToText::new().with(&clip, "I never get this right");
        assert_eq!(transcribe(&clip, &stt).unwrap(), "I never get this right");
    }

    #[test]
    fn silent_clip_has_no_transcript() {
        let clip = AudioClip::silence(16_000, 16_000).unwrap();
        let stt = FixtureSpeechToText::new().with(&clip, "ghost");
        assert_eq!(transcribe(&clip, &stt), Err(EmotionError::EmptyTranscript));
    }

    #[test]
    fn unavailable_backend_carries_retry_after() {
        match transcribe(&tone(), &Offline) {
            Err(EmotionError::Adapter(e)) => assert_eq!(e.retry_after_ms(), Some(2_000)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
