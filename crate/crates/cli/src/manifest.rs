use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use causal_harness::evalkit::MetricMode;
use causal_harness::llmclient::ModelConfig;
use causal_harness::prompt::PromptKind;
use serde::{Deserialize, Serialize};

use crate::settings::{BackendChoice, Layer, Settings};
use crate::CliError;

/// Everything needed to reproduce a `predict` run. Written next to the
/// predictions file as `<out>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub prompt: PromptKind,
    pub backend: BackendChoice,
    pub model: ModelConfig,
    pub cache_dir: Option<PathBuf>,
    pub grounding: bool,
    pub metric: MetricMode,
    pub gold: Option<PathBuf>,
    pub script: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(
        settings: &Settings,
        corpus: &Path,
        output: &Path,
        gold: Option<&Path>,
        script: Option<&Path>,
    ) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            corpus: corpus.to_path_buf(),
            output: output.to_path_buf(),
            prompt: settings.prompt,
            backend: settings.backend,
            model: settings.model.clone(),
            cache_dir: settings.cache_dir.clone(),
            grounding: settings.ground,
            metric: settings.metric,
            gold: gold.map(Path::to_path_buf),
            script: script.map(Path::to_path_buf),
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| CliError::Input(format!("bad manifest {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// The recorded settings as a complete layer.
    pub fn layer(&self) -> Layer {
        let m = &self.model;
        Layer {
            backend: Some(self.backend.as_str().to_string()),
            model: Some(m.model_name.clone()),
            endpoint: Some(m.endpoint_url.clone()),
            prompt: Some(self.prompt.as_str().to_string()),
            cache_dir: self.cache_dir.clone(),
            ground: Some(self.grounding),
            metric: Some(self.metric.to_string()),
            temperature: Some(m.temperature),
            max_tokens: Some(m.max_tokens),
            timeout_secs: Some(m.timeout_secs),
            max_retries: Some(m.max_retries),
            concurrency: Some(m.concurrency_limit),
            retry_base_delay_ms: Some(m.retry_base_delay_ms),
            requests_per_second: m.requests_per_second,
        }
    }
}
