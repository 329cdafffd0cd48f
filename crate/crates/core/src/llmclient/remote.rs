//! OpenAI-compatible `/chat/completions` client with retries.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Backend, Completion, LlmError, ModelConfig};
use crate::prompt::RenderedPrompt;

pub const API_KEY_ENV: &str = "CAUSAL_HARNESS_API_KEY";

const MAX_BACKOFF: Duration = Duration::from_secs(60);

pub struct RemoteBackend {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    gate: Option<RateGate>,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("url", &self.url).finish_non_exhaustive()
    }
}

/// Spaces request starts at least `interval` apart across threads.
struct RateGate {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateGate {
    fn wait(&self) {
        let slot = {
            let mut next = self.next.lock().unwrap();
            let slot = (*next).max(Instant::now());
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

enum Attempt {
    Done(Completion),
    Retry(LlmError, Option<Duration>),
    Fail(LlmError),
}

impl RemoteBackend {
    pub fn new(config: &ModelConfig, api_key: String) -> Result<Self, LlmError> {
        if api_key.is_empty() {
            return Err(LlmError::AuthMissing);
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build();
        let url = format!("{}/chat/completions", config.endpoint_url.trim_end_matches('/'));
        let gate = config.requests_per_second.map(|rps| RateGate {
            interval: Duration::from_secs_f64(1.0 / rps),
            next: Mutex::new(Instant::now()),
        });
        Ok(RemoteBackend {
            agent,
            url,
            api_key,
            gate,
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        if let Some(gate) = &self.gate {
            gate.wait();
        }
        let result = self
            .agent
            .post(&self.url)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body.clone());
        match result {
            Ok(resp) => match resp.into_json::<Value>() {
                Ok(v) => match extract_content(&v) {
                    Some(text) => Attempt::Done(Completion {
                        text,
                        model_name: v.get("model").and_then(Value::as_str).map(str::to_string),
                    }),
                    None => Attempt::Fail(LlmError::BadResponse(
                        "missing choices[0].message.content".to_string(),
                    )),
                },
                Err(e) => match classify_io(&e) {
                    bad @ LlmError::BadResponse(_) => Attempt::Fail(bad),
                    other => Attempt::Retry(other, None),
                },
            },
            Err(ureq::Error::Status(code, resp)) => {
                let retry_after = resp
                    .header("retry-after")
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|s| s.is_finite() && *s >= 0.0)
                    .map(Duration::from_secs_f64);
                match code {
                    429 => Attempt::Retry(LlmError::RateLimited, retry_after),
                    500..=599 => Attempt::Retry(LlmError::HttpError(code), retry_after),
                    _ => Attempt::Fail(LlmError::HttpError(code)),
                }
            }
            Err(ureq::Error::Transport(t)) => {
                let timed_out = std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .is_some_and(is_timeout)
                    || t.to_string().contains("timed out");
                let err = if timed_out {
                    LlmError::Timeout
                } else {
                    LlmError::Transport(t.to_string())
                };
                Attempt::Retry(err, None)
            }
        }
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock)
}

fn classify_io(e: &std::io::Error) -> LlmError {
    if is_timeout(e) {
        LlmError::Timeout
    } else if e.kind() == std::io::ErrorKind::InvalidData {
        LlmError::BadResponse(e.to_string())
    } else {
        LlmError::Transport(e.to_string())
    }
}

fn extract_content(v: &Value) -> Option<String> {
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

pub(crate) fn request_body(config: &ModelConfig, prompt: &RenderedPrompt) -> Value {
    json!({
        "model": config.model_name,
        "messages": [{"role": "user", "content": prompt.text}],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    })
}

fn backoff(config: &ModelConfig, attempt: u32) -> Duration {
    let ms = config
        .retry_base_delay_ms
        .saturating_mul(1u64 << attempt.min(20));
    Duration::from_millis(ms).min(MAX_BACKOFF)
}

impl Backend for RemoteBackend {
    fn complete(&self, config: &ModelConfig, prompt: &RenderedPrompt) -> Result<Completion, LlmError> {
        let body = request_body(config, prompt);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e, hint) => {
                    if attempt >= config.max_retries {
                        return Err(e);
                    }
                    let delay = hint.map_or_else(|| backoff(config, attempt), |h| h.min(MAX_BACKOFF));
                    log::debug!("retrying after {e} in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}
