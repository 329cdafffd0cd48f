//! Token-level scoring, error diagnostics and report rendering.

mod diagnostics;
mod labels;
mod report;
mod score;

use thiserror::Error;

pub use diagnostics::{detect_overflow, detect_swap, token_jaccard};
pub use labels::{token_labels, Span, TokenLabel};
pub use report::{parse_report_json, render_report, LabelledRun, ReportDocument, ReportFormat, REPORT_SCHEMA};
pub use score::{score, score_with, ClassMetrics, EvalReport, MetricMode, Prf};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("span {start}..{end} lies outside a text of {len} characters")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("id mismatch: {0}")]
    IdMismatch(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("gold row {0} has no cause/effect annotation")]
    MissingGold(String),
}
