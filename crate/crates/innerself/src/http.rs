//! JSON-over-HTTP clients for external inference backends.
//!
//! | stage | request | response |
//! |---|---|---|
//! | speech-to-text | `POST /transcribe`, WAV body | `{"text"}` |
//! | audio features | `POST /features`, WAV body | `{"values": [f64]}` |
//! | language model | `POST /generate`, `{"prompt"}` | `{"text"}` |
//! | speaker encoder | `POST /embed`, multipart with one `audio` WAV part | `{"embedding": [256 f64]}` |
//! | synthesizer | `POST /synthesize`, `{"text", "embedding", "prosody"}` | `{"mel", "dims": [T, M]}` |
//! | vocoder | `POST /vocode`, `{"mel", "dims"}` | WAV bytes |
//!
//! `mel` is base64 of little-endian float32 values, row-major by frame.
//! Every call has the configured timeout; transport failures, timeouts and
//! 429/5xx answers map to [`AdapterError::Unavailable`], carrying
//! `Retry-After` when the backend sends one.

use std::io::Read;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use innerself_core::conversation::{LanguageModel, ProsodyParams};
use innerself_core::emotion::{
    AdapterDescriptor, AudioFeatureExtractor, EmotionError, FeatureVector, Modality, SpeechToText,
};
use innerself_core::voice::{
    MelParams, MelSpectrogram, SpeakerEncoder, Synthesizer, Vocoder, VoiceProfile,
};
use innerself_core::{AdapterError, AudioClip};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::wav;

const MAX_RESPONSE_BYTES: u64 = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
struct Client {
    agent: ureq::Agent,
    base: String,
    backend: &'static str,
}

impl Client {
    fn new(base: &str, timeout: Duration, backend: &'static str) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            base: base.trim_end_matches('/').to_string(),
            backend,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn map_error(&self, err: ureq::Error) -> AdapterError {
        match err {
            ureq::Error::Status(code, resp) if code == 429 || code >= 500 => {
                let retry_after_ms = resp
                    .header("Retry-After")
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(|s| s * 1000);
                AdapterError::Unavailable {
                    backend: self.backend.into(),
                    reason: format!("HTTP {code}"),
                    retry_after_ms,
                }
            }
            ureq::Error::Status(code, _) => AdapterError::protocol(self.backend, format!("HTTP {code}")),
            ureq::Error::Transport(t) => AdapterError::unavailable(self.backend, t.to_string()),
        }
    }

    fn read_bytes(&self, resp: ureq::Response) -> Result<Vec<u8>, AdapterError> {
        let mut out = Vec::new();
        resp.into_reader()
            .take(MAX_RESPONSE_BYTES)
            .read_to_end(&mut out)
            .map_err(|e| AdapterError::unavailable(self.backend, e.to_string()))?;
        Ok(out)
    }

    fn decode<T: DeserializeOwned>(&self, resp: ureq::Response) -> Result<T, AdapterError> {
        let bytes = self.read_bytes(resp)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| AdapterError::protocol(self.backend, format!("bad JSON: {e}")))
    }

    fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, AdapterError> {
        let resp = self
            .agent
            .post(&self.url(path))
            .send_json(body)
            .map_err(|e| self.map_error(e))?;
        self.decode(resp)
    }

    fn post_wav(&self, path: &str, clip: &AudioClip) -> Result<ureq::Response, AdapterError> {
        self.agent
            .post(&self.url(path))
            .set("Content-Type", "audio/wav")
            .send_bytes(&wav::encode_wav(clip))
            .map_err(|e| self.map_error(e))
    }
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

pub struct HttpSpeechToText(Client);

impl HttpSpeechToText {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self(Client::new(base, timeout, "stt"))
    }
}

impl SpeechToText for HttpSpeechToText {
    fn transcribe(&self, clip: &AudioClip) -> Result<String, AdapterError> {
        let resp = self.0.post_wav("/transcribe", clip)?;
        Ok(self.0.decode::<TextReply>(resp)?.text)
    }
}

pub struct HttpFeatures {
    client: Client,
    dim: usize,
}

impl HttpFeatures {
    pub fn new(base: &str, dim: usize, timeout: Duration) -> Self {
        Self {
            client: Client::new(base, timeout, "features"),
            dim,
        }
    }
}

#[derive(Deserialize)]
struct FeatureReply {
    values: Vec<f64>,
}

impl AudioFeatureExtractor for HttpFeatures {
    fn descriptor(&self) -> AdapterDescriptor {
        AdapterDescriptor {
            name: "http".into(),
            feature_dim: self.dim,
            endpoint: Some(self.client.base.clone()),
        }
    }

    fn extract(&self, clip: &AudioClip) -> Result<FeatureVector, EmotionError> {
        let resp = self.client.post_wav("/features", clip)?;
        let reply: FeatureReply = self.client.decode(resp)?;
        if reply.values.len() != self.dim {
            return Err(EmotionError::DimensionMismatch {
                expected: self.dim,
                found: reply.values.len(),
            });
        }
        FeatureVector::new(reply.values, Modality::Audio)
    }
}

pub struct HttpLanguageModel(Client);

impl HttpLanguageModel {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self(Client::new(base, timeout, "llm"))
    }
}

impl LanguageModel for HttpLanguageModel {
    fn complete(&self, prompt: &str) -> Result<String, AdapterError> {
        #[derive(Serialize)]
        struct Req<'a> {
            prompt: &'a str,
        }
        Ok(self.0.post_json::<_, TextReply>("/generate", &Req { prompt })?.text)
    }
}

pub struct HttpSpeakerEncoder(Client);

impl HttpSpeakerEncoder {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self(Client::new(base, timeout, "speaker-encoder"))
    }
}

const BOUNDARY: &str = "innerself-embed-boundary";

fn multipart_wav(wav: &[u8]) -> Vec<u8> {
    let mut body = Vec::with_capacity(wav.len() + 256);
    body.extend_from_slice(
        format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"audio\"; filename=\"sample.wav\"\r\nContent-Type: audio/wav\r\n\r\n"
        )
        .as_bytes(),
    );
    body.extend_from_slice(wav);
    body.extend_from_slice(format!("\r\n--{BOUNDARY}--\r\n").as_bytes());
    body
}

impl SpeakerEncoder for HttpSpeakerEncoder {
    fn embed(&self, clip: &AudioClip) -> Result<Vec<f64>, AdapterError> {
        #[derive(Deserialize)]
        struct Reply {
            embedding: Vec<f64>,
        }
        let resp = self
            .0
            .agent
            .post(&self.0.url("/embed"))
            .set("Content-Type", &format!("multipart/form-data; boundary={BOUNDARY}"))
            .send_bytes(&multipart_wav(&wav::encode_wav(clip)))
            .map_err(|e| self.0.map_error(e))?;
        Ok(self.0.decode::<Reply>(resp)?.embedding)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WireMel {
    pub mel: String,
    pub dims: [usize; 2],
}

impl WireMel {
    pub fn encode(mel: &MelSpectrogram) -> Self {
        let mut bytes = Vec::with_capacity(mel.data().len() * 4);
        for v in mel.data() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        Self {
            mel: BASE64.encode(bytes),
            dims: [mel.n_frames(), mel.n_mels()],
        }
    }

    pub fn decode(&self, backend: &str) -> Result<MelSpectrogram, AdapterError> {
        let bytes = BASE64
            .decode(&self.mel)
            .map_err(|e| AdapterError::protocol(backend, format!("bad base64: {e}")))?;
        let params = MelParams::default();
        let [frames, mels] = self.dims;
        if mels != params.n_mels || bytes.len() != frames * mels * 4 {
            return Err(AdapterError::protocol(
                backend,
                format!("mel dims {:?} do not match {} bytes of {} mels", self.dims, bytes.len(), params.n_mels),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        MelSpectrogram::new(params, frames, data).map_err(|e| AdapterError::protocol(backend, e.to_string()))
    }
}

pub struct HttpSynthesizer(Client);

impl HttpSynthesizer {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self(Client::new(base, timeout, "synthesizer"))
    }
}

impl Synthesizer for HttpSynthesizer {
    fn synthesize(
        &self,
        text: &str,
        profile: &VoiceProfile,
        prosody: &ProsodyParams,
    ) -> Result<MelSpectrogram, AdapterError> {
        #[derive(Serialize)]
        struct Req<'a> {
            text: &'a str,
            embedding: &'a [f64],
            prosody: &'a ProsodyParams,
        }
        let reply: WireMel = self.0.post_json(
            "/synthesize",
            &Req {
                text,
                embedding: profile.embedding(),
                prosody,
            },
        )?;
        reply.decode(self.0.backend)
    }
}

pub struct HttpVocoder(Client);

impl HttpVocoder {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self(Client::new(base, timeout, "vocoder"))
    }
}

impl Vocoder for HttpVocoder {
    fn vocode(&self, mel: &MelSpectrogram) -> Result<AudioClip, AdapterError> {
        let resp = self
            .0
            .agent
            .post(&self.0.url("/vocode"))
            .send_json(WireMel::encode(mel))
            .map_err(|e| self.0.map_error(e))?;
        let bytes = self.0.read_bytes(resp)?;
        wav::decode_wav(&bytes).map_err(|e| AdapterError::protocol(self.0.backend, e.to_string()))
    }
}
