//! Reading, validating and summarizing `;`-delimited causality corpora.
//!
//! File layout: a header `Index; Text; Cause; Effect` (the gold columns are
//! absent for unlabelled files), one record per line, fields containing the
//! delimiter wrapped in `"` with embedded quotes doubled. One optional space
//! after each delimiter is dropped; field contents are otherwise kept byte
//! for byte.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::token_count;

pub const DELIMITER: char = ';';
pub const HEADER_WITH_GOLD: [&str; 4] = ["Index", "Text", "Cause", "Effect"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPair {
    pub cause: String,
    pub effect: String,
}

/// One corpus row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    pub text: String,
    pub gold: Option<GoldPair>,
}

/// One row of a predictions file. Empty strings mean "no prediction".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub text: String,
    pub cause: String,
    pub effect: String,
}

impl Prediction {
    pub fn empty(segment: &Segment) -> Self {
        Prediction {
            id: segment.id.clone(),
            text: segment.text.clone(),
            cause: String::new(),
            effect: String::new(),
        }
    }

    /// The gold pair of `segment` written as a prediction.
    pub fn from_gold(segment: &Segment) -> Option<Self> {
        segment.gold.as_ref().map(|g| Prediction {
            id: segment.id.clone(),
            text: segment.text.clone(),
            cause: g.cause.clone(),
            effect: g.effect.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CorpusWarning {
    WrongColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    EmptyText {
        line: usize,
    },
    EmptyGold {
        line: usize,
        id: String,
    },
    UnterminatedQuote {
        line: usize,
    },
}

impl fmt::Display for CorpusWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusWarning::WrongColumnCount {
                line,
                expected,
                found,
            } => write!(f, "line {line}: expected {expected} columns, found {found}"),
            CorpusWarning::EmptyText { line } => write!(f, "line {line}: empty text, row skipped"),
            CorpusWarning::EmptyGold { line, id } => {
                write!(f, "line {line} (id {id}): empty cause or effect, row skipped")
            }
            CorpusWarning::UnterminatedQuote { line } => {
                write!(f, "line {line}: unterminated quoted field")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing or malformed header: {0}")]
    MissingHeader(String),
    #[error("no data row could be parsed ({} warnings)", .0.len())]
    NoValidRows(Vec<CorpusWarning>),
    #[error("segment {0} has no gold annotation")]
    NoGold(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A raw delimited record with the 1-based line number it started on.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Record {
    line: usize,
    fields: Vec<String>,
    unterminated: bool,
}

fn read_records(input: &str) -> Vec<Record> {
    let input = input.strip_prefix('\u{feff}').unwrap_or(input);
    let mut records = Vec::new();
    let mut chars = input.chars().peekable();
    let mut line = 1;

    while chars.peek().is_some() {
        let start_line = line;
        let mut fields = Vec::new();
        let mut field = String::new();
        let mut unterminated = false;
        let mut at_field_start = true;
        let mut first_field = true;

        loop {
            if at_field_start {
                if !first_field && chars.peek() == Some(&' ') {
                    chars.next();
                }
                at_field_start = false;
                if chars.peek() == Some(&'"') {
                    chars.next();
                    let mut closed = false;
                    while let Some(c) = chars.next() {
                        if c == '"' {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                field.push('"');
                            } else {
                                closed = true;
                                break;
                            }
                        } else {
                            if c == '\n' {
                                line += 1;
                            }
                            field.push(c);
                        }
                    }
                    if !closed {
                        unterminated = true;
                    }
                }
            }
            match chars.next() {
                None => {
                    fields.push(std::mem::take(&mut field));
                    break;
                }
                Some('\r') if chars.peek() == Some(&'\n') => {}
                Some('\n') => {
                    line += 1;
                    fields.push(std::mem::take(&mut field));
                    break;
                }
                Some(DELIMITER) => {
                    fields.push(std::mem::take(&mut field));
                    at_field_start = true;
                    first_field = false;
                }
                Some(c) => field.push(c),
            }
        }

        let blank = fields.len() == 1 && fields[0].trim().is_empty();
        if !blank {
            records.push(Record {
                line: start_line,
                fields,
                unterminated,
            });
        }
    }
    records
}

/// True when the header row carries the Cause/Effect columns.
pub fn sniff_has_gold(input: &str) -> bool {
    read_records(input)
        .first()
        .is_some_and(|h| h.fields.len() == HEADER_WITH_GOLD.len())
}

fn check_header(record: Option<&Record>, has_gold: bool) -> Result<usize, CorpusError> {
    let header = record.ok_or_else(|| CorpusError::MissingHeader("input is empty".into()))?;
    let names: Vec<&str> = header.fields.iter().map(|f| f.trim()).collect();
    let accepted: &[usize] = if has_gold { &[4] } else { &[2, 4] };
    let matches = accepted.contains(&names.len())
        && names
            .iter()
            .zip(HEADER_WITH_GOLD)
            .all(|(got, want)| got.eq_ignore_ascii_case(want));
    if matches {
        Ok(names.len())
    } else {
        Err(CorpusError::MissingHeader(format!(
            "expected `{}`, found `{}`",
            if has_gold { "Index; Text; Cause; Effect" } else { "Index; Text" },
            header.fields.join(";")
        )))
    }
}

/// Parses a corpus. Defective rows are reported as warnings and skipped.
pub fn parse_corpus(
    input: &str,
    has_gold: bool,
) -> Result<(Vec<Segment>, Vec<CorpusWarning>), CorpusError> {
    let records = read_records(input);
    let columns = check_header(records.first(), has_gold)?;
    let mut segments = Vec::new();
    let mut warnings = Vec::new();

    for rec in records.into_iter().skip(1) {
        if rec.unterminated {
            warnings.push(CorpusWarning::UnterminatedQuote { line: rec.line });
        }
        if rec.fields.len() != columns {
            warnings.push(CorpusWarning::WrongColumnCount {
                line: rec.line,
                expected: columns,
                found: rec.fields.len(),
            });
            continue;
        }
        let mut fields = rec.fields.into_iter();
        let id = fields.next().unwrap_or_default();
        let text = fields.next().unwrap_or_default();
        if text.trim().is_empty() {
            warnings.push(CorpusWarning::EmptyText { line: rec.line });
            continue;
        }
        let gold = if has_gold {
            let cause = fields.next().unwrap_or_default();
            let effect = fields.next().unwrap_or_default();
            if cause.trim().is_empty() || effect.trim().is_empty() {
                warnings.push(CorpusWarning::EmptyGold { line: rec.line, id });
                continue;
            }
            Some(GoldPair { cause, effect })
        } else {
            None
        };
        segments.push(Segment { id, text, gold });
    }

    if segments.is_empty() && !warnings.is_empty() {
        return Err(CorpusError::NoValidRows(warnings));
    }
    Ok((segments, warnings))
}

/// Parses a predictions file (`Index; Text; Cause; Effect`). Empty cause or
/// effect fields are legal here.
pub fn parse_predictions(
    input: &str,
) -> Result<(Vec<Prediction>, Vec<CorpusWarning>), CorpusError> {
    let records = read_records(input);
    check_header(records.first(), true)?;
    let mut preds = Vec::new();
    let mut warnings = Vec::new();
    for rec in records.into_iter().skip(1) {
        if rec.unterminated {
            warnings.push(CorpusWarning::UnterminatedQuote { line: rec.line });
        }
        let [id, text, cause, effect]: [String; 4] = match rec.fields.try_into() {
            Ok(f) => f,
            Err(f) => {
                warnings.push(CorpusWarning::WrongColumnCount {
                    line: rec.line,
                    expected: 4,
                    found: f.len(),
                });
                continue;
            }
        };
        preds.push(Prediction {
            id,
            text,
            cause,
            effect,
        });
    }
    if preds.is_empty() && !warnings.is_empty() {
        return Err(CorpusError::NoValidRows(warnings));
    }
    Ok((preds, warnings))
}

pub fn read_to_string(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn needs_quotes(field: &str) -> bool {
    field.starts_with('"')
        || field
            .chars()
            .any(|c| c == DELIMITER || c == '"' || c == '\n' || c == '\r')
}

fn push_field(out: &mut String, field: &str) {
    if needs_quotes(field) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Serializes predictions in the corpus format. Re-parsing the output yields
/// the same rows.
pub fn write_predictions(predictions: &[Prediction]) -> String {
    let mut out = HEADER_WITH_GOLD.join("; ");
    out.push('\n');
    for p in predictions {
        for (i, field) in [&p.id, &p.text, &p.cause, &p.effect].into_iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            push_field(&mut out, field);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub cause_is_substring: bool,
    pub effect_is_substring: bool,
}

impl ValidationRecord {
    pub fn is_valid(&self) -> bool {
        self.cause_is_substring && self.effect_is_substring
    }
}

/// Checks that both gold strings occur verbatim (case-sensitive) in the text.
pub fn validate_segment(segment: &Segment) -> Result<ValidationRecord, CorpusError> {
    let gold = segment
        .gold
        .as_ref()
        .ok_or_else(|| CorpusError::NoGold(segment.id.clone()))?;
    Ok(ValidationRecord {
        cause_is_substring: segment.text.contains(gold.cause.as_str()),
        effect_is_substring: segment.text.contains(gold.effect.as_str()),
    })
}

/// Average, minimum and maximum of a whitespace-token length distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub avg: f64,
    pub min: usize,
    pub max: usize,
}

impl LengthSummary {
    fn from_lengths(lengths: impl Iterator<Item = usize>) -> Option<Self> {
        let (mut n, mut sum, mut min, mut max) = (0usize, 0u64, usize::MAX, 0usize);
        for len in lengths {
            n += 1;
            sum += len as u64;
            min = min.min(len);
            max = max.max(len);
        }
        (n > 0).then(|| LengthSummary {
            avg: sum as f64 / n as f64,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_documents: usize,
    pub n_duplicates: usize,
    pub doc_len: LengthSummary,
    pub cause_len: Option<LengthSummary>,
    pub effect_len: Option<LengthSummary>,
}

/// Row count, duplicate texts and token-length summaries.
///
/// Duplicates are rows minus distinct `text` values (byte comparison). The
/// cause/effect summaries are only filled in when every segment has gold.
pub fn compute_stats(segments: &[Segment]) -> Result<DatasetStats, CorpusError> {
    if segments.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let distinct: HashSet<&str> = segments.iter().map(|s| s.text.as_str()).collect();
    let doc_len = LengthSummary::from_lengths(segments.iter().map(|s| token_count(&s.text)))
        .ok_or(CorpusError::EmptyCorpus)?;
    let golds: Option<Vec<&GoldPair>> = segments.iter().map(|s| s.gold.as_ref()).collect();
    let (cause_len, effect_len) = match golds {
        Some(golds) => (
            LengthSummary::from_lengths(golds.iter().map(|g| token_count(&g.cause))),
            LengthSummary::from_lengths(golds.iter().map(|g| token_count(&g.effect))),
        ),
        None => (None, None),
    };
    Ok(DatasetStats {
        n_documents: segments.len(),
        n_duplicates: segments.len() - distinct.len(),
        doc_len,
        cause_len,
        effect_len,
    })
}
