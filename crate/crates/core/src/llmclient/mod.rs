//! Chat-completion backends behind one config: an OpenAI-compatible HTTP
//! endpoint, a gold-echoing oracle and a scripted mock. Responses can be
//! cached on disk and batches run on a bounded worker pool.

mod cache;
mod mock;
mod pool;
mod remote;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::RenderedPrompt;

pub use cache::{CacheEntry, CacheLookup, ResponseCache};
pub use mock::{CannedBackend, OracleBackend};
pub use pool::map_bounded;
pub use remote::{RemoteBackend, API_KEY_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Remote,
    MockOracle,
    MockCanned,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Remote => "remote",
            BackendKind::MockOracle => "mock-oracle",
            BackendKind::MockCanned => "mock-canned",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "mock-oracle" => Ok(BackendKind::MockOracle),
            "mock-canned" => Ok(BackendKind::MockCanned),
            other => Err(LlmError::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backend: BackendKind,
    pub model_name: String,
    /// Base URL; requests go to `{endpoint_url}/chat/completions`.
    pub endpoint_url: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub concurrency_limit: usize,
    /// First retry delay; doubles on every further attempt.
    pub retry_base_delay_ms: u64,
    /// Optional cap on request starts per second against the endpoint.
    pub requests_per_second: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backend: BackendKind::Remote,
            model_name: "gpt-3.5-turbo".to_string(),
            endpoint_url: "https://api.openai.com/v1".to_string(),
            temperature: 0.0,
            max_tokens: 512,
            timeout_secs: 60.0,
            max_retries: 3,
            concurrency_limit: 4,
            retry_base_delay_ms: 500,
            requests_per_second: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |msg: &str| Err(LlmError::InvalidConfig(msg.to_string()));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite number >= 0");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        if self.concurrency_limit == 0 {
            return bad("concurrency_limit must be positive");
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout must be a positive number of seconds");
        }
        if let Some(rps) = self.requests_per_second {
            if !(rps > 0.0 && rps.is_finite()) {
                return bad("requests_per_second must be positive");
            }
        }
        if self.backend == BackendKind::Remote {
            if self.endpoint_url.trim().is_empty() {
                return bad("remote backend requires an endpoint URL");
            }
            if self.model_name.trim().is_empty() {
                return bad("remote backend requires a model name");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    /// The assistant message content, unmodified.
    pub text: String,
    pub model_name: String,
    pub from_cache: bool,
    /// Wall-clock seconds spent on the call; 0 for cache hits.
    pub latency_secs: f64,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited; retries exhausted")]
    RateLimited,
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("environment variable {} is not set", API_KEY_ENV)]
    AuthMissing,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("oracle has no gold answer for this context")]
    OracleMiss,
    #[error("canned script exhausted")]
    ScriptExhausted,
    #[error("cache I/O on {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Something that turns a rendered prompt into assistant text.
pub trait Backend: Send + Sync {
    fn complete(&self, config: &ModelConfig, prompt: &RenderedPrompt) -> Result<Completion, LlmError>;
}

/// Backend output before timing and cache bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Model name reported by the backend, when it reports one.
    pub model_name: Option<String>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion {
            text: text.into(),
            model_name: None,
        }
    }
}

/// Stable hex digest identifying a request: backend, model, decoding
/// parameters and prompt text.
pub fn cache_key(config: &ModelConfig, prompt: &RenderedPrompt) -> String {
    let mut hasher = Sha256::new();
    let mut field = |bytes: &[u8]| {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    field(b"causal-harness-cache-v1");
    field(config.backend.as_str().as_bytes());
    field(config.model_name.as_bytes());
    field(&config.temperature.to_bits().to_le_bytes());
    field(&config.max_tokens.to_le_bytes());
    field(prompt.text.as_bytes());
    hex::encode(hasher.finalize())
}

pub struct LlmClient {
    config: ModelConfig,
    backend: Box<dyn Backend>,
}

impl fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmClient").field("config", &self.config).finish_non_exhaustive()
    }
}

impl LlmClient {
    pub fn new(config: ModelConfig, backend: Box<dyn Backend>) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(LlmClient { config, backend })
    }

    /// Remote client with the API key read from [`API_KEY_ENV`].
    pub fn remote_from_env(config: ModelConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::remote(config, key.ok_or(LlmError::AuthMissing)?)
    }

    pub fn remote(config: ModelConfig, api_key: String) -> Result<Self, LlmError> {
        if config.backend != BackendKind::Remote {
            return Err(LlmError::InvalidConfig(format!(
                "config names backend {}, not remote",
                config.backend
            )));
        }
        config.validate()?;
        let backend = RemoteBackend::new(&config, api_key)?;
        Self::new(config, Box::new(backend))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<RawResponse, LlmError> {
        let started = Instant::now();
        let completion = self.backend.complete(&self.config, prompt)?;
        Ok(RawResponse {
            text: completion.text,
            model_name: completion.model_name.unwrap_or_else(|| self.config.model_name.clone()),
            from_cache: false,
            latency_secs: started.elapsed().as_secs_f64(),
        })
    }

    /// Serves from `cache` when possible; otherwise calls the backend and
    /// persists the answer before returning it.
    pub fn cached_complete(
        &self,
        prompt: &RenderedPrompt,
        cache: &ResponseCache,
    ) -> Result<RawResponse, LlmError> {
        let key = cache_key(&self.config, prompt);
        match cache.lookup(&key, &self.config, prompt) {
            CacheLookup::Hit(entry) => {
                return Ok(RawResponse {
                    text: entry.response_text,
                    model_name: entry.response_model,
                    from_cache: true,
                    latency_secs: 0.0,
                })
            }
            CacheLookup::Corrupt(reason) => {
                log::warn!("discarding corrupt cache entry {key}: {reason}");
            }
            CacheLookup::Miss => {}
        }
        let response = self.complete(prompt)?;
        cache.store(&CacheEntry::new(key, &self.config, prompt, &response))?;
        Ok(response)
    }

    /// Completes every prompt with at most `concurrency_limit` calls in
    /// flight. Results come back in input order.
    pub fn complete_batch(
        &self,
        prompts: &[RenderedPrompt],
        cache: Option<&ResponseCache>,
    ) -> Vec<Result<RawResponse, LlmError>> {
        map_bounded(prompts, self.config.concurrency_limit, |p| match cache {
            Some(c) => self.cached_complete(p, c),
            None => self.complete(p),
        })
    }
}
