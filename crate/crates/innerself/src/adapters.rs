//! Backend selection: reference implementations or HTTP endpoints, per
//! stage, as configured.

use std::path::Path;
use std::time::Duration;

use innerself_core::conversation::{LanguageModel, ScriptEchoModel};
use innerself_core::emotion::{
    AudioFeatureExtractor, FixtureSpeechToText, ReferenceAudioFeatures, SpeechToText,
};
use innerself_core::voice::{
    ReferenceSpeakerEncoder, ReferenceSynthesizer, ReferenceVocoder, SpeakerEncoder, Synthesizer,
    Vocoder,
};
use innerself_core::{AdapterError, AudioClip};

use crate::config::{AdapterConfig, Endpoint};
use crate::http::{
    HttpFeatures, HttpLanguageModel, HttpSpeakerEncoder, HttpSpeechToText, HttpSynthesizer,
    HttpVocoder,
};
use crate::wav;

pub struct Adapters {
    pub stt: Box<dyn SpeechToText + Send + Sync>,
    /// Whether per-turn transcript hints may stand in for the speech-to-text
    /// call. Only the reference backend honours them.
    pub accepts_transcript_hints: bool,
    pub features: Box<dyn AudioFeatureExtractor + Send + Sync>,
    pub llm: Box<dyn LanguageModel + Send + Sync>,
    pub encoder: Box<dyn SpeakerEncoder + Send + Sync>,
    pub synthesizer: Box<dyn Synthesizer + Send + Sync>,
    pub vocoder: Box<dyn Vocoder + Send + Sync>,
}

impl Adapters {
    /// Every stage on its reference implementation; speech-to-text knows
    /// only the given fixtures.
    pub fn reference(fixtures: FixtureSpeechToText) -> Self {
        Self {
            stt: Box::new(fixtures),
            accepts_transcript_hints: true,
            features: Box::new(ReferenceAudioFeatures),
            llm: Box::new(ScriptEchoModel),
            encoder: Box::new(ReferenceSpeakerEncoder::default()),
            synthesizer: Box::new(ReferenceSynthesizer::default()),
            vocoder: Box::new(ReferenceVocoder),
        }
    }

    pub fn from_config(config: &AdapterConfig, fixtures_dir: Option<&Path>) -> anyhow::Result<Self> {
        let timeout = Duration::from_millis(config.timeout_ms);
        let fixtures = match fixtures_dir {
            Some(dir) => load_fixture_transcripts(dir)?,
            None => FixtureSpeechToText::new(),
        };
        let mut adapters = Self::reference(fixtures);
        if let Endpoint::Http(url) = &config.stt {
            adapters.stt = Box::new(HttpSpeechToText::new(url, timeout));
            adapters.accepts_transcript_hints = false;
        }
        if let Endpoint::Http(url) = &config.features {
            let dim = config
                .feature_dim
                .ok_or_else(|| anyhow::anyhow!("adapters.feature_dim is required"))?;
            adapters.features = Box::new(HttpFeatures::new(url, dim, timeout));
        }
        if let Endpoint::Http(url) = &config.llm {
            adapters.llm = Box::new(HttpLanguageModel::new(url, timeout));
        }
        if let Endpoint::Http(url) = &config.encoder {
            adapters.encoder = Box::new(HttpSpeakerEncoder::new(url, timeout));
        }
        if let Endpoint::Http(url) = &config.synthesizer {
            adapters.synthesizer = Box::new(HttpSynthesizer::new(url, timeout));
        }
        if let Endpoint::Http(url) = &config.vocoder {
            adapters.vocoder = Box::new(HttpVocoder::new(url, timeout));
        }
        Ok(adapters)
    }
}

/// Reads every `name.wav` with a sibling `name.txt` in `dir`.
pub fn load_fixture_transcripts(dir: &Path) -> anyhow::Result<FixtureSpeechToText> {
    let mut stt = FixtureSpeechToText::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| anyhow::anyhow!("cannot read fixtures dir {}: {e}", dir.display()))?
        .collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("wav") {
            continue;
        }
        let txt = path.with_extension("txt");
        if let Ok(text) = std::fs::read_to_string(&txt) {
            let clip = wav::read_wav(&path)?;
            stt.register(&clip, text.trim());
        }
    }
    Ok(stt)
}

/// Speech-to-text stand-in that answers with a transcript supplied
/// alongside the audio.
pub struct HintedSpeechToText<'a>(pub &'a str);

impl SpeechToText for HintedSpeechToText<'_> {
    fn transcribe(&self, _clip: &AudioClip) -> Result<String, AdapterError> {
        Ok(self.0.to_string())
    }
}
