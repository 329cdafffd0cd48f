//! Option layering: command-line flags over environment over config file
//! over built-in defaults.
//!
//! The config file is TOML with flat keys, all optional:
//!
//! ```toml
//! backend = "remote"            # remote | mock-oracle | mock-canned | cue
//! model = "gpt-3.5-turbo"
//! endpoint = "https://api.openai.com/v1"
//! prompt = "cot"                # gen | task | cot
//! cache_dir = ".cache/responses"
//! ground = true
//! metric = "pooled"             # pooled | per-row-macro
//! temperature = 0.0
//! max_tokens = 512
//! timeout_secs = 60.0
//! max_retries = 3
//! concurrency = 4
//! retry_base_delay_ms = 500
//! requests_per_second = 2.0
//! ```
//!
//! Environment variables use the `CAUSAL_HARNESS_` prefix and the upper-case
//! key, e.g. `CAUSAL_HARNESS_MODEL`, `CAUSAL_HARNESS_CONCURRENCY`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use causal_harness::evalkit::MetricMode;
use causal_harness::llmclient::{BackendKind, ModelConfig};
use causal_harness::prompt::PromptKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ENV_PREFIX: &str = "CAUSAL_HARNESS_";

/// What produces cause/effect strings for `predict`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    Remote,
    MockOracle,
    MockCanned,
    /// The connective-rule baseline; no model is called.
    Cue,
}

impl BackendChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendChoice::Remote => "remote",
            BackendChoice::MockOracle => "mock-oracle",
            BackendChoice::MockCanned => "mock-canned",
            BackendChoice::Cue => "cue",
        }
    }

    /// The model backend this choice calls, if any.
    pub fn model_backend(self) -> Option<BackendKind> {
        match self {
            BackendChoice::Remote => Some(BackendKind::Remote),
            BackendChoice::MockOracle => Some(BackendKind::MockOracle),
            BackendChoice::MockCanned => Some(BackendKind::MockCanned),
            BackendChoice::Cue => None,
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendChoice::Remote),
            "mock-oracle" => Ok(BackendChoice::MockOracle),
            "mock-canned" => Ok(BackendChoice::MockCanned),
            "cue" => Ok(BackendChoice::Cue),
            other => Err(format!(
                "unknown backend `{other}` (expected remote, mock-oracle, mock-canned or cue)"
            )),
        }
    }
}

/// One layer of settings; unset keys fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub backend: Option<String>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub prompt: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub ground: Option<bool>,
    pub metric: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub concurrency: Option<usize>,
    pub retry_base_delay_ms: Option<u64>,
    pub requests_per_second: Option<f64>,
}

impl Layer {
    pub fn from_toml(input: &str) -> Result<Self, CliError> {
        toml::from_str(input).map_err(|e| CliError::Input(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&raw)
    }

    /// Reads `CAUSAL_HARNESS_*` variables through `get`.
    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let var = |key: &str| get(&format!("{ENV_PREFIX}{key}")).filter(|v| !v.is_empty());
        fn num<T: FromStr>(key: &str, v: Option<String>) -> Result<Option<T>, CliError> {
            v.map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("{ENV_PREFIX}{key}: cannot parse `{s}`")))
            })
            .transpose()
        }
        Ok(Layer {
            backend: var("BACKEND"),
            model: var("MODEL"),
            endpoint: var("ENDPOINT"),
            prompt: var("PROMPT"),
            cache_dir: var("CACHE_DIR").map(PathBuf::from),
            ground: num("GROUND", var("GROUND"))?,
            metric: var("METRIC"),
            temperature: num("TEMPERATURE", var("TEMPERATURE"))?,
            max_tokens: num("MAX_TOKENS", var("MAX_TOKENS"))?,
            timeout_secs: num("TIMEOUT_SECS", var("TIMEOUT_SECS"))?,
            max_retries: num("MAX_RETRIES", var("MAX_RETRIES"))?,
            concurrency: num("CONCURRENCY", var("CONCURRENCY"))?,
            retry_base_delay_ms: num("RETRY_BASE_DELAY_MS", var("RETRY_BASE_DELAY_MS"))?,
            requests_per_second: num("REQUESTS_PER_SECOND", var("REQUESTS_PER_SECOND"))?,
        })
    }

    /// Keys set in `self` win over `lower`.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            backend: self.backend.or(lower.backend),
            model: self.model.or(lower.model),
            endpoint: self.endpoint.or(lower.endpoint),
            prompt: self.prompt.or(lower.prompt),
            cache_dir: self.cache_dir.or(lower.cache_dir),
            ground: self.ground.or(lower.ground),
            metric: self.metric.or(lower.metric),
            temperature: self.temperature.or(lower.temperature),
            max_tokens: self.max_tokens.or(lower.max_tokens),
            timeout_secs: self.timeout_secs.or(lower.timeout_secs),
            max_retries: self.max_retries.or(lower.max_retries),
            concurrency: self.concurrency.or(lower.concurrency),
            retry_base_delay_ms: self.retry_base_delay_ms.or(lower.retry_base_delay_ms),
            requests_per_second: self.requests_per_second.or(lower.requests_per_second),
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub backend: BackendChoice,
    pub prompt: PromptKind,
    pub cache_dir: Option<PathBuf>,
    pub ground: bool,
    pub metric: MetricMode,
    pub model: ModelConfig,
}

impl Settings {
    pub fn resolve(layer: Layer) -> Result<Self, CliError> {
        let backend: BackendChoice = match layer.backend {
            Some(s) => s.parse().map_err(CliError::Input)?,
            None => BackendChoice::Remote,
        };
        let prompt = match layer.prompt {
            Some(s) => s.parse().map_err(|e| CliError::Input(format!("{e}")))?,
            None => PromptKind::Cot,
        };
        let metric = match layer.metric {
            Some(s) => s.parse().map_err(CliError::Input)?,
            None => MetricMode::Pooled,
        };
        let d = ModelConfig::default();
        let model = ModelConfig {
            backend: backend.model_backend().unwrap_or(BackendKind::MockOracle),
            model_name: layer.model.unwrap_or(d.model_name),
            endpoint_url: layer.endpoint.unwrap_or(d.endpoint_url),
            temperature: layer.temperature.unwrap_or(d.temperature),
            max_tokens: layer.max_tokens.unwrap_or(d.max_tokens),
            timeout_secs: layer.timeout_secs.unwrap_or(d.timeout_secs),
            max_retries: layer.max_retries.unwrap_or(d.max_retries),
            concurrency_limit: layer.concurrency.unwrap_or(d.concurrency_limit),
            retry_base_delay_ms: layer.retry_base_delay_ms.unwrap_or(d.retry_base_delay_ms),
            requests_per_second: layer.requests_per_second.or(d.requests_per_second),
        };
        Ok(Settings {
            backend,
            prompt,
            cache_dir: layer.cache_dir,
            ground: layer.ground.unwrap_or(true),
            metric,
            model,
        })
    }
}
