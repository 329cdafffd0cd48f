use std::io::Write;
use std::path::{Path, PathBuf};

use causal_harness::corpus::{
    compute_stats, parse_corpus, parse_predictions, read_to_string, sniff_has_gold, validate_segment,
    write_predictions, CorpusWarning, DatasetStats, LengthSummary, Prediction, Segment,
};
use causal_harness::evalkit::{
    parse_report_json, render_report, score_with, EvalError, LabelledRun, MetricMode, ReportFormat,
};
use causal_harness::extract::{cue_baseline, ground_span, parse_response, ExtractionCandidate, Grounding, ParseStatus};
use causal_harness::llmclient::{
    CannedBackend, LlmClient, LlmError, OracleBackend, RawResponse, ResponseCache, API_KEY_ENV,
};
use causal_harness::prompt::{render_prompt, RenderedPrompt};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::settings::{BackendChoice, Settings};
use crate::CliError;

fn log_warnings(path: &Path, warnings: &[CorpusWarning]) {
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
}

fn load_corpus(path: &Path, require_gold: bool) -> Result<Vec<Segment>, CliError> {
    let input = read_to_string(path).map_err(|e| CliError::Input(e.to_string()))?;
    let has_gold = require_gold || sniff_has_gold(&input);
    let (segments, warnings) =
        parse_corpus(&input, has_gold).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    log_warnings(path, &warnings);
    Ok(segments)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

fn fmt_len(l: Option<LengthSummary>) -> String {
    match l {
        Some(l) => format!("{:>8.2} {:>6} {:>6}", l.avg, l.min, l.max),
        None => format!("{:>8} {:>6} {:>6}", "-", "-", "-"),
    }
}

pub fn render_stats_table(stats: &DatasetStats) -> String {
    let mut s = String::new();
    s.push_str(&format!("{:<14}{:>8}\n", "documents", stats.n_documents));
    s.push_str(&format!("{:<14}{:>8}\n", "duplicates", stats.n_duplicates));
    s.push_str(&format!("{:<14}{:>8} {:>6} {:>6}\n", "tokens", "avg", "min", "max"));
    s.push_str(&format!("{:<14}{}\n", "text", fmt_len(Some(stats.doc_len))));
    s.push_str(&format!("{:<14}{}\n", "cause", fmt_len(stats.cause_len)));
    s.push_str(&format!("{:<14}{}\n", "effect", fmt_len(stats.effect_len)));
    s
}

pub fn cmd_stats(corpus: &Path, json: bool, out: &mut dyn Write) -> Result<DatasetStats, CliError> {
    let segments = load_corpus(corpus, false)?;
    let stats = compute_stats(&segments).map_err(|e| CliError::Input(e.to_string()))?;
    let text = if json {
        serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"
    } else {
        render_stats_table(&stats)
    };
    emit(out, &text)?;
    Ok(stats)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvalidRow {
    pub id: String,
    pub cause_is_substring: bool,
    pub effect_is_substring: bool,
}

/// Lists rows whose gold strings are not verbatim substrings of the text.
/// Fails with an input error when any such row exists.
pub fn cmd_validate(corpus: &Path, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let segments = load_corpus(corpus, true)?;
    let mut invalid = Vec::new();
    for seg in &segments {
        let v = validate_segment(seg).map_err(|e| CliError::Input(e.to_string()))?;
        if !v.is_valid() {
            invalid.push(InvalidRow {
                id: seg.id.clone(),
                cause_is_substring: v.cause_is_substring,
                effect_is_substring: v.effect_is_substring,
            });
        }
    }
    let text = if json {
        serde_json::to_string_pretty(&invalid).expect("rows serialize") + "\n"
    } else {
        let mut s = String::new();
        for r in &invalid {
            let mark = |ok: bool| if ok { "ok" } else { "NOT FOUND" };
            s.push_str(&format!(
                "{}\tcause: {}\teffect: {}\n",
                r.id,
                mark(r.cause_is_substring),
                mark(r.effect_is_substring)
            ));
        }
        s.push_str(&format!(
            "{} of {} rows valid\n",
            segments.len() - invalid.len(),
            segments.len()
        ));
        s
    };
    emit(out, &text)?;
    if invalid.is_empty() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{} row(s) have gold spans that are not substrings of their text",
            invalid.len()
        )))
    }
}

/// Inputs of one `predict` run.
#[derive(Debug, Clone)]
pub struct PredictJob {
    pub corpus: PathBuf,
    pub out: PathBuf,
    /// Gold source for the oracle backend; defaults to the corpus.
    pub gold: Option<PathBuf>,
    /// JSON array of responses for the canned backend.
    pub script: Option<PathBuf>,
    pub settings: Settings,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PredictSummary {
    pub rows: usize,
    pub backend_failures: usize,
    pub cache_hits: usize,
    pub parse_failures: usize,
    pub not_grounded: usize,
}

fn backend_error(e: LlmError) -> CliError {
    CliError::Backend(e.to_string())
}

fn build_client(job: &PredictJob, segments: &[Segment], api_key: Option<String>) -> Result<Option<LlmClient>, CliError> {
    let config = job.settings.model.clone();
    match job.settings.backend {
        BackendChoice::Cue => Ok(None),
        BackendChoice::Remote => {
            let key = api_key.filter(|k| !k.is_empty()).ok_or(CliError::Backend(format!(
                "the remote backend needs an API key in {API_KEY_ENV}"
            )))?;
            LlmClient::remote(config, key).map(Some).map_err(backend_error)
        }
        BackendChoice::MockOracle => {
            let oracle = match &job.gold {
                Some(path) => OracleBackend::from_segments(
                    &load_corpus(path, true).map_err(|e| CliError::Backend(format!("oracle gold: {e}")))?,
                ),
                None => OracleBackend::from_segments(segments),
            };
            if oracle.is_empty() {
                return Err(CliError::Backend(
                    "mock-oracle needs gold annotations (corpus with Cause/Effect or --gold)".into(),
                ));
            }
            LlmClient::new(config, Box::new(oracle)).map(Some).map_err(backend_error)
        }
        BackendChoice::MockCanned => {
            let path = job
                .script
                .as_ref()
                .ok_or_else(|| CliError::Backend("mock-canned needs --script".into()))?;
            let raw = std::fs::read_to_string(path)
                .map_err(|e| CliError::Backend(format!("cannot read script {}: {e}", path.display())))?;
            let script: Vec<String> = serde_json::from_str(&raw).map_err(|e| {
                CliError::Backend(format!("script {} must be a JSON array of strings: {e}", path.display()))
            })?;
            LlmClient::new(config, Box::new(CannedBackend::new(script)))
                .map(Some)
                .map_err(backend_error)
        }
    }
}

/// Maps one extracted string onto the segment text, or drops it.
fn finalize_field(value: &str, seg: &Segment, ground: bool, role: &str, summary: &mut PredictSummary) -> String {
    let value = value.trim();
    if value.is_empty() {
        return String::new();
    }
    if !ground {
        return value.to_string();
    }
    match ground_span(value, &seg.text) {
        Ok(Grounding::Grounded(span)) => span.matched_text,
        Ok(Grounding::NotGrounded { best_score }) => {
            summary.not_grounded += 1;
            log::warn!(
                "row {}: {role} could not be grounded (best score {}); left empty",
                seg.id,
                best_score.map_or("n/a".to_string(), |s| format!("{s:.3}"))
            );
            String::new()
        }
        Err(_) => String::new(),
    }
}

fn to_prediction(
    seg: &Segment,
    cand: &ExtractionCandidate,
    ground: bool,
    summary: &mut PredictSummary,
) -> Prediction {
    if cand.parse_status == ParseStatus::Failed {
        summary.parse_failures += 1;
        log::warn!("row {}: no cause or effect could be parsed from the response", seg.id);
    }
    Prediction {
        id: seg.id.clone(),
        text: seg.text.clone(),
        cause: finalize_field(&cand.cause_text, seg, ground, "cause", summary),
        effect: finalize_field(&cand.effect_text, seg, ground, "effect", summary),
    }
}

/// Runs extraction over a corpus and writes the predictions file plus its
/// manifest. Per-row failures become empty fields; configuration and
/// credential problems fail before any row is processed.
pub fn cmd_predict(job: &PredictJob, api_key: Option<String>) -> Result<PredictSummary, CliError> {
    let mut job = job.clone();
    if job.settings.backend == BackendChoice::MockCanned && job.settings.model.concurrency_limit != 1 {
        log::info!("mock-canned replays its script in order; using a single worker");
        job.settings.model.concurrency_limit = 1;
    }
    if job.settings.backend != BackendChoice::Cue {
        job.settings.model.validate().map_err(backend_error)?;
    }
    if job.settings.backend == BackendChoice::Remote && api_key.as_deref().is_none_or(str::is_empty) {
        return Err(CliError::Backend(format!(
            "the remote backend needs an API key in {API_KEY_ENV}"
        )));
    }

    let segments = load_corpus(&job.corpus, false)?;
    let client = build_client(&job, &segments, api_key)?;
    let cache = match (&client, &job.settings.cache_dir) {
        (Some(_), Some(dir)) => Some(ResponseCache::open(dir).map_err(backend_error)?),
        _ => None,
    };

    let mut summary = PredictSummary {
        rows: segments.len(),
        ..PredictSummary::default()
    };
    let predictions: Vec<Prediction> = match &client {
        None => segments
            .iter()
            .map(|seg| to_prediction(seg, &cue_baseline(&seg.text), job.settings.ground, &mut summary))
            .collect(),
        Some(client) => {
            let rendered: Vec<Option<RenderedPrompt>> = segments
                .iter()
                .map(|seg| match render_prompt(job.settings.prompt, &seg.text) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        log::warn!("row {}: cannot render prompt: {e}", seg.id);
                        None
                    }
                })
                .collect();
            let prompts: Vec<RenderedPrompt> = rendered.iter().flatten().cloned().collect();
            let mut responses = client.complete_batch(&prompts, cache.as_ref()).into_iter();
            let mut preds = Vec::with_capacity(segments.len());
            for (seg, prompt) in segments.iter().zip(&rendered) {
                let response: Option<RawResponse> = match prompt {
                    None => None,
                    Some(_) => match responses.next().expect("one response per prompt") {
                        Ok(r) => Some(r),
                        Err(e) => {
                            summary.backend_failures += 1;
                            log::warn!("row {}: backend error: {e}", seg.id);
                            None
                        }
                    },
                };
                preds.push(match &response {
                    Some(r) => {
                        summary.cache_hits += usize::from(r.from_cache);
                        to_prediction(seg, &parse_response(&r.text), job.settings.ground, &mut summary)
                    }
                    None => Prediction::empty(seg),
                });
            }
            preds
        }
    };

    write_file(&job.out, &write_predictions(&predictions))?;
    let manifest = RunManifest::new(
        &job.settings,
        &job.corpus,
        &job.out,
        job.gold.as_deref(),
        job.script.as_deref(),
    );
    write_file(&RunManifest::path_for(&job.out), &manifest.to_json())?;

    if client.is_some() && summary.rows > 0 && summary.backend_failures == summary.rows {
        return Err(CliError::Backend(format!(
            "every request failed; wrote {} empty rows to {}",
            summary.rows,
            job.out.display()
        )));
    }
    Ok(summary)
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::IdMismatch(_) | EvalError::DuplicateId(_) | EvalError::MissingGold(_) => {
            CliError::Alignment(e.to_string())
        }
        other => CliError::Input(other.to_string()),
    }
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub struct EvaluateJob {
    pub predictions: PathBuf,
    pub gold: PathBuf,
    pub metric: MetricMode,
    pub json: bool,
    pub out: Option<PathBuf>,
    pub label: Option<String>,
}

pub fn cmd_evaluate(job: &EvaluateJob, out: &mut dyn Write) -> Result<causal_harness::evalkit::EvalReport, CliError> {
    let pred_input = read_to_string(&job.predictions).map_err(|e| CliError::Input(e.to_string()))?;
    let (preds, warnings) = parse_predictions(&pred_input)
        .map_err(|e| CliError::Input(format!("{}: {e}", job.predictions.display())))?;
    log_warnings(&job.predictions, &warnings);
    let golds = load_corpus(&job.gold, true)?;
    let report = score_with(&preds, &golds, job.metric).map_err(eval_error)?;
    let runs = [LabelledRun {
        label: job.label.clone().unwrap_or_else(|| file_label(&job.predictions)),
        report: report.clone(),
    }];
    let format = if job.json { ReportFormat::Json } else { ReportFormat::Markdown };
    let text = render_report(&report, &runs, format);
    if let Some(path) = &job.out {
        write_file(path, &text)?;
    }
    emit(out, &text)?;
    Ok(report)
}

/// Combines saved JSON reports into one comparison. The first file is the
/// main report; `labels` override the per-file names in order.
pub fn cmd_report(
    inputs: &[PathBuf],
    labels: &[String],
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input("report needs at least one JSON report".into()));
    }
    let mut runs = Vec::with_capacity(inputs.len());
    for (i, path) in inputs.iter().enumerate() {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let doc = parse_report_json(&raw).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let label = labels
            .get(i)
            .cloned()
            .or_else(|| (doc.runs.len() == 1).then(|| doc.runs[0].label.clone()))
            .unwrap_or_else(|| file_label(path));
        runs.push(LabelledRun {
            label,
            report: doc.report,
        });
    }
    let text = render_report(&runs[0].report, &runs, format);
    emit(out, &text)
}
