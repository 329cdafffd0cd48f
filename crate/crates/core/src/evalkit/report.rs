//! Report output.
//!
//! JSON layout (`schema` = `causal-harness/report-v1`):
//!
//! ```text
//! {
//!   "schema": "causal-harness/report-v1",
//!   "report": EvalReport,
//!   "runs": [ { "label": string, "report": EvalReport }, ... ]
//! }
//! ```
//!
//! `EvalReport` serializes its fields in declaration order: `metric`
//! (`pooled` | `per-row-macro`), `cause` / `effect` / `other` (each
//! `precision`, `recall`, `f1`, `support`), `weighted` (`precision`,
//! `recall`, `f1`), `exact_match`, then the integer diagnostic counters.
//!
//! Markdown output is a comparison table with one row per run and the
//! columns Submission | Precision | Recall | F1 | Exact Match, followed by
//! per-class scores and diagnostic counts for the main report.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::score::EvalReport;

pub const REPORT_SCHEMA: &str = "causal-harness/report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}` (expected json or markdown)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledRun {
    pub label: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub report: EvalReport,
    pub runs: Vec<LabelledRun>,
}

pub fn parse_report_json(input: &str) -> Result<ReportDocument, serde_json::Error> {
    serde_json::from_str(input)
}

pub fn render_report(report: &EvalReport, runs: &[LabelledRun], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let doc = ReportDocument {
                schema: REPORT_SCHEMA.to_string(),
                report: report.clone(),
                runs: runs.to_vec(),
            };
            let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Markdown => render_markdown(report, runs),
    }
}

fn render_markdown(report: &EvalReport, runs: &[LabelledRun]) -> String {
    let mut out = String::new();
    out.push_str("| Submission | Precision | Recall | F1 | Exact Match |\n");
    out.push_str("|:-----------|----------:|-------:|---:|------------:|\n");
    for run in runs {
        let r = &run.report;
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {:.2} | {:.2} |",
            run.label.replace('|', "\\|"),
            r.weighted.precision,
            r.weighted.recall,
            r.weighted.f1,
            r.exact_match
        );
    }

    let _ = writeln!(out, "\n### Per-class scores ({} metric)\n", report.metric);
    out.push_str("| Class | Precision | Recall | F1 | Support |\n");
    out.push_str("|:------|----------:|-------:|---:|--------:|\n");
    for (name, c) in [("Cause", &report.cause), ("Effect", &report.effect), ("Other", &report.other)] {
        let _ = writeln!(
            out,
            "| {name} | {:.3} | {:.3} | {:.3} | {} |",
            c.precision, c.recall, c.f1, c.support
        );
    }

    out.push_str("\n### Diagnostics\n\n");
    out.push_str("| Diagnostic | Count |\n|:-----------|------:|\n");
    for (name, n) in [
        ("Segments", report.n_segments),
        ("Parse failures", report.n_parse_failed),
        ("Not grounded", report.n_not_grounded),
        ("Cause overflow", report.n_overflow_cause),
        ("Effect overflow", report.n_overflow_effect),
        ("Cause/effect swapped", report.n_swapped),
        ("Label conflicts (tokens)", report.n_label_conflicts),
    ] {
        let _ = writeln!(out, "| {name} | {n} |");
    }
    out
}
