//! On-disk response cache: one JSON file per request key.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{LlmError, ModelConfig, RawResponse};
use crate::prompt::RenderedPrompt;

/// Stored request parameters next to the response they produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub backend: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub prompt_kind: String,
    pub prompt_text: String,
    pub response_text: String,
    pub response_model: String,
}

impl CacheEntry {
    pub fn new(key: String, config: &ModelConfig, prompt: &RenderedPrompt, response: &RawResponse) -> Self {
        CacheEntry {
            key,
            backend: config.backend.as_str().to_string(),
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            prompt_kind: prompt.kind.as_str().to_string(),
            prompt_text: prompt.text.clone(),
            response_text: response.text.clone(),
            response_model: response.model_name.clone(),
        }
    }

    fn matches(&self, key: &str, config: &ModelConfig, prompt: &RenderedPrompt) -> bool {
        self.key == key
            && self.backend == config.backend.as_str()
            && self.model_name == config.model_name
            && self.temperature.to_bits() == config.temperature.to_bits()
            && self.max_tokens == config.max_tokens
            && self.prompt_text == prompt.text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit(CacheEntry),
    Miss,
    /// The file exists but cannot be used; the reason is for logging.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    /// Opens `dir`, creating it if needed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LlmError::CacheIo {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn lookup(&self, key: &str, config: &ModelConfig, prompt: &RenderedPrompt) -> CacheLookup {
        let path = self.path_for(key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return CacheLookup::Miss,
            Err(e) => return CacheLookup::Corrupt(e.to_string()),
        };
        match serde_json::from_str::<CacheEntry>(&raw) {
            Ok(entry) if entry.matches(key, config, prompt) => CacheLookup::Hit(entry),
            Ok(_) => CacheLookup::Corrupt("stored request does not match".to_string()),
            Err(e) => CacheLookup::Corrupt(e.to_string()),
        }
    }

    /// Writes the entry to a temporary file and renames it into place, so a
    /// reader never sees a half-written entry.
    pub fn store(&self, entry: &CacheEntry) -> Result<(), LlmError> {
        let path = self.path_for(&entry.key);
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self
            .dir
            .join(format!(".{}.{}-{}.tmp", entry.key, std::process::id(), n));
        let io_err = |p: &Path| {
            let p = p.display().to_string();
            move |source| LlmError::CacheIo { path: p, source }
        };
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        file.write_all(body.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.sync_all())
            .map_err(io_err(&tmp))?;
        drop(file);
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io_err(&path)(e)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::cache_key;
    use crate::prompt::{render_prompt, PromptKind};

    fn setup() -> (tempfile::TempDir, ResponseCache, ModelConfig, RenderedPrompt) {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("nested/cache")).unwrap();
        let cfg = ModelConfig::default();
        let prompt = render_prompt(PromptKind::Gen, "Rates rose. Stocks fell.").unwrap();
        (dir, cache, cfg, prompt)
    }

    fn response(text: &str) -> RawResponse {
        RawResponse {
            text: text.into(),
            model_name: "m".into(),
            from_cache: false,
            latency_secs: 0.5,
        }
    }

    #[test]
    fn store_then_hit() {
        let (_d, cache, cfg, prompt) = setup();
        let key = cache_key(&cfg, &prompt);
        assert_eq!(cache.lookup(&key, &cfg, &prompt), CacheLookup::Miss);
        let entry = CacheEntry::new(key.clone(), &cfg, &prompt, &response("{'Cause': 'a'}"));
        cache.store(&entry).unwrap();
        assert_eq!(cache.lookup(&key, &cfg, &prompt), CacheLookup::Hit(entry));
        // no temp files left behind
        let names: Vec<_> = fs::read_dir(cache.dir()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn garbage_is_corrupt() {
        let (_d, cache, cfg, prompt) = setup();
        let key = cache_key(&cfg, &prompt);
        fs::write(cache.path_for(&key), "{not json").unwrap();
        assert!(matches!(cache.lookup(&key, &cfg, &prompt), CacheLookup::Corrupt(_)));
    }

    #[test]
    fn mismatched_envelope_is_corrupt() {
        let (_d, cache, cfg, prompt) = setup();
        let key = cache_key(&cfg, &prompt);
        let mut entry = CacheEntry::new(key.clone(), &cfg, &prompt, &response("x"));
        entry.prompt_text.push('!');
        cache.store(&entry).unwrap();
        assert!(matches!(cache.lookup(&key, &cfg, &prompt), CacheLookup::Corrupt(_)));
    }
}
