//! Service configuration: a TOML file plus `INNERSELF_*` environment
//! overrides.

use std::path::{Path, PathBuf};

use innerself_core::voice::EnrollmentRules;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "INNERSELF_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for {key}: {reason}")]
    Env { key: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where a pipeline stage runs: the built-in reference implementation or
/// an HTTP inference endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum Endpoint {
    #[default]
    Reference,
    Http(String),
}

impl TryFrom<String> for Endpoint {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let s = s.trim();
        if s == "reference" {
            Ok(Endpoint::Reference)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Endpoint::Http(s.trim_end_matches('/').to_string()))
        } else {
            Err(format!("`{s}` is neither \"reference\" nor an http(s) URL"))
        }
    }
}

impl From<Endpoint> for String {
    fn from(e: Endpoint) -> Self {
        match e {
            Endpoint::Reference => "reference".into(),
            Endpoint::Http(url) => url,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub stt: Endpoint,
    pub features: Endpoint,
    /// Audio feature dimension reported by an HTTP feature backend.
    pub feature_dim: Option<usize>,
    pub llm: Endpoint,
    pub encoder: Endpoint,
    pub synthesizer: Endpoint,
    pub vocoder: Endpoint,
    pub timeout_ms: u64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            stt: Endpoint::Reference,
            features: Endpoint::Reference,
            feature_dim: None,
            llm: Endpoint::Reference,
            encoder: Endpoint::Reference,
            synthesizer: Endpoint::Reference,
            vocoder: Endpoint::Reference,
            timeout_ms: 10_000,
        }
    }
}

/// Optional replacements for the shipped tables and word lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablePaths {
    pub strategies: Option<PathBuf>,
    pub substitutions: Option<PathBuf>,
    pub prosody: Option<PathBuf>,
    pub absolutes: Option<PathBuf>,
    pub positive: Option<PathBuf>,
    pub negative: Option<PathBuf>,
    pub head: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub bind: String,
    /// Dialogue buffer capacity in characters.
    pub alpha: usize,
    pub max_response_chars: usize,
    /// Directory of `name.wav` + `name.txt` pairs preloaded into the
    /// reference speech-to-text backend.
    pub fixtures_dir: Option<PathBuf>,
    pub adapters: AdapterConfig,
    pub tables: TablePaths,
    pub enrollment: EnrollmentRules,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            bind: "127.0.0.1:8080".into(),
            alpha: innerself_core::storage::DEFAULT_CAPACITY,
            max_response_chars: 300,
            fixtures_dir: None,
            adapters: AdapterConfig::default(),
            tables: TablePaths::default(),
            enrollment: EnrollmentRules::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (defaults when `None`), then applies the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => Config::default(),
        };
        config.apply_env(std::env::vars())?;
        Ok(config)
    }

    /// Applies `INNERSELF_*` overrides, e.g. `INNERSELF_ALPHA=800` or
    /// `INNERSELF_ADAPTERS_LLM=http://localhost:9000`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let bad = |reason: String| ConfigError::Env {
                key: key.clone(),
                reason,
            };
            let number = |v: &str| v.parse::<u64>().map_err(|e| bad(e.to_string()));
            let endpoint = |v: &str| Endpoint::try_from(v.to_string()).map_err(bad);
            match name {
                "DATA_DIR" => self.data_dir = PathBuf::from(&value),
                "BIND" => self.bind = value.clone(),
                "ALPHA" => self.alpha = number(&value)? as usize,
                "MAX_RESPONSE_CHARS" => self.max_response_chars = number(&value)? as usize,
                "FIXTURES_DIR" => self.fixtures_dir = Some(PathBuf::from(&value)),
                "ADAPTERS_STT" => self.adapters.stt = endpoint(&value)?,
                "ADAPTERS_FEATURES" => self.adapters.features = endpoint(&value)?,
                "ADAPTERS_FEATURE_DIM" => self.adapters.feature_dim = Some(number(&value)? as usize),
                "ADAPTERS_LLM" => self.adapters.llm = endpoint(&value)?,
                "ADAPTERS_ENCODER" => self.adapters.encoder = endpoint(&value)?,
                "ADAPTERS_SYNTHESIZER" => self.adapters.synthesizer = endpoint(&value)?,
                "ADAPTERS_VOCODER" => self.adapters.vocoder = endpoint(&value)?,
                "ADAPTERS_TIMEOUT_MS" => self.adapters.timeout_ms = number(&value)?,
                // Unrelated variables sharing the prefix (e.g. INNERSELF_LOG) are ignored.
                _ => {}
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.alpha == 0 {
            return Err(ConfigError::Invalid("alpha must be positive".into()));
        }
        if self.max_response_chars == 0 || self.max_response_chars > self.alpha {
            return Err(ConfigError::Invalid(format!(
                "max_response_chars must be within 1..={} (alpha)",
                self.alpha
            )));
        }
        if self.adapters.timeout_ms == 0 {
            return Err(ConfigError::Invalid("adapters.timeout_ms must be positive".into()));
        }
        if matches!(self.adapters.features, Endpoint::Http(_)) && self.adapters.feature_dim.is_none() {
            return Err(ConfigError::Invalid(
                "adapters.feature_dim is required with an HTTP feature backend".into(),
            ));
        }
        Ok(())
    }
}
