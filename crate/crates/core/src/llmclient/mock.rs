use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::{Backend, Completion, LlmError, ModelConfig};
use crate::corpus::{GoldPair, Segment};
use crate::extract::format_answer;
use crate::prompt::RenderedPrompt;

/// Answers each prompt with the gold pair of its context, formatted the way
/// the prompts ask a model to answer.
#[derive(Debug, Default)]
pub struct OracleBackend {
    answers: HashMap<String, GoldPair>,
}

impl OracleBackend {
    /// When two entries share a context, the first one is kept.
    pub fn new(pairs: impl IntoIterator<Item = (String, GoldPair)>) -> Self {
        let mut answers = HashMap::new();
        for (context, gold) in pairs {
            if answers.contains_key(&context) {
                log::warn!("oracle: duplicate context, keeping the first gold pair");
                continue;
            }
            answers.insert(context, gold);
        }
        OracleBackend { answers }
    }

    pub fn from_segments(segments: &[Segment]) -> Self {
        Self::new(
            segments
                .iter()
                .filter_map(|s| s.gold.clone().map(|g| (s.text.clone(), g))),
        )
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl Backend for OracleBackend {
    fn complete(&self, _config: &ModelConfig, prompt: &RenderedPrompt) -> Result<Completion, LlmError> {
        let gold = self.answers.get(&prompt.context).ok_or(LlmError::OracleMiss)?;
        Ok(Completion::text(format_answer(&gold.cause, &gold.effect)))
    }
}

/// Returns scripted responses in order, one per call.
#[derive(Debug, Default)]
pub struct CannedBackend {
    script: Mutex<VecDeque<String>>,
}

impl CannedBackend {
    pub fn new(script: impl IntoIterator<Item = String>) -> Self {
        CannedBackend {
            script: Mutex::new(script.into_iter().collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.script.lock().unwrap().len()
    }
}

impl Backend for CannedBackend {
    fn complete(&self, _config: &ModelConfig, _prompt: &RenderedPrompt) -> Result<Completion, LlmError> {
        self.script
            .lock()
            .unwrap()
            .pop_front()
            .map(Completion::text)
            .ok_or(LlmError::ScriptExhausted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::parse_response;
    use crate::prompt::{render_prompt, PromptKind};

    fn gold(c: &str, e: &str) -> GoldPair {
        GoldPair {
            cause: c.into(),
            effect: e.into(),
        }
    }

    #[test]
    fn oracle_round_trips_through_parser() {
        let backend = OracleBackend::new([
            ("ctx one".to_string(), gold("it's a cause", "an \\ effect")),
            ("ctx one".to_string(), gold("ignored", "ignored")),
        ]);
        assert_eq!(backend.len(), 1);
        let cfg = ModelConfig::default();
        let p = render_prompt(PromptKind::Task, "ctx one").unwrap();
        let out = backend.complete(&cfg, &p).unwrap().text;
        let parsed = parse_response(&out);
        assert_eq!(parsed.cause_text, "it's a cause");
        assert_eq!(parsed.effect_text, "an \\ effect");

        let miss = render_prompt(PromptKind::Task, "other").unwrap();
        assert!(matches!(backend.complete(&cfg, &miss), Err(LlmError::OracleMiss)));
    }

    #[test]
    fn canned_plays_in_order_then_exhausts() {
        let backend = CannedBackend::new(["a".to_string(), "b".to_string()]);
        let cfg = ModelConfig::default();
        let p = render_prompt(PromptKind::Gen, "x").unwrap();
        assert_eq!(backend.complete(&cfg, &p).unwrap().text, "a");
        assert_eq!(backend.complete(&cfg, &p).unwrap().text, "b");
        assert!(matches!(backend.complete(&cfg, &p), Err(LlmError::ScriptExhausted)));
    }
}
