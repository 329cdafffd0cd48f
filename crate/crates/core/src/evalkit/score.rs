use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::diagnostics::{detect_overflow, detect_swap};
use super::labels::{label_tokens, Span, TokenLabel};
use super::EvalError;
use crate::corpus::{GoldPair, Prediction, Segment};
use crate::extract::ground_span;
use crate::text::byte_to_char;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMode {
    /// Confusion counts pooled over every token of every row.
    #[default]
    Pooled,
    /// Metrics computed per row, then averaged over rows.
    PerRowMacro,
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Pooled => "pooled",
            MetricMode::PerRowMacro => "per-row-macro",
        })
    }
}

impl FromStr for MetricMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(MetricMode::Pooled),
            "per-row-macro" => Ok(MetricMode::PerRowMacro),
            other => Err(format!("unknown metric mode `{other}` (expected pooled or per-row-macro)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold tokens of this class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: MetricMode,
    pub cause: ClassMetrics,
    pub effect: ClassMetrics,
    pub other: ClassMetrics,
    pub weighted: Prf,
    pub exact_match: f64,
    pub n_segments: usize,
    /// Rows whose predicted cause and effect are both empty.
    pub n_parse_failed: usize,
    /// Rows with a non-empty predicted string that does not occur in the text.
    pub n_not_grounded: usize,
    pub n_overflow_cause: usize,
    pub n_overflow_effect: usize,
    pub n_swapped: usize,
    /// Tokens overlapping both the cause and effect span (gold and predicted).
    pub n_label_conflicts: usize,
}

/// `conf[gold][pred]` token counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Confusion([[u64; 3]; 3]);

impl Confusion {
    fn add(&mut self, other: &Confusion) {
        for g in 0..3 {
            for p in 0..3 {
                self.0[g][p] += other.0[g][p];
            }
        }
    }

    fn class(&self, k: usize) -> ClassMetrics {
        let tp = self.0[k][k];
        let fp: u64 = (0..3).filter(|&g| g != k).map(|g| self.0[g][k]).sum();
        let fn_: u64 = (0..3).filter(|&p| p != k).map(|p| self.0[k][p]).sum();
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: tp + fn_,
        }
    }

    fn metrics(&self) -> ([ClassMetrics; 3], Prf) {
        let classes = [0, 1, 2].map(|k| self.class(k));
        let total: u64 = classes.iter().map(|c| c.support).sum();
        let avg = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                classes.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / total as f64
            }
        };
        let weighted = Prf {
            precision: avg(|c| c.precision),
            recall: avg(|c| c.recall),
            f1: avg(|c| c.f1),
        };
        (classes, weighted)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Leftmost verbatim occurrence of the trimmed string.
fn locate(text: &str, s: &str) -> Option<Span> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    text.find(s).map(|b| {
        let start = byte_to_char(text, b);
        Span::new(start, start + s.chars().count())
    })
}

fn locate_gold(seg: &Segment, s: &str) -> Option<Span> {
    locate(&seg.text, s).or_else(|| {
        log::warn!("gold span of row {} is not a substring of its text; grounding it", seg.id);
        ground_span(s, &seg.text)
            .ok()
            .and_then(|g| g.span().map(Span::from))
    })
}

struct RowOutcome {
    confusion: Confusion,
    exact: bool,
    parse_failed: bool,
    not_grounded: bool,
    overflow_cause: bool,
    overflow_effect: bool,
    swapped: bool,
    conflicts: usize,
}

fn score_row(pred: &Prediction, seg: &Segment, gold: &GoldPair) -> Result<RowOutcome, EvalError> {
    let text = seg.text.as_str();
    let gold_labels = label_tokens(
        text,
        locate_gold(seg, &gold.cause),
        locate_gold(seg, &gold.effect),
    )?;

    let pc = pred.cause.trim();
    let pe = pred.effect.trim();
    let pred_cause = locate(text, pc);
    let pred_effect = locate(text, pe);
    let not_grounded = (!pc.is_empty() && pred_cause.is_none()) || (!pe.is_empty() && pred_effect.is_none());
    let pred_labels = label_tokens(text, pred_cause, pred_effect)?;

    let mut confusion = Confusion::default();
    for (g, p) in gold_labels.labels.iter().zip(&pred_labels.labels) {
        confusion.0[g.index()][p.index()] += 1;
    }

    Ok(RowOutcome {
        confusion,
        exact: pc == gold.cause.trim() && pe == gold.effect.trim(),
        parse_failed: pc.is_empty() && pe.is_empty(),
        not_grounded,
        overflow_cause: detect_overflow(pc, &gold.cause),
        overflow_effect: detect_overflow(pe, &gold.effect),
        swapped: detect_swap(pc, pe, &gold.cause, &gold.effect),
        conflicts: gold_labels.conflicts + pred_labels.conflicts,
    })
}

/// Pairs predictions with gold rows by id. Every id must appear exactly once
/// on each side. Rows come back sorted by id.
fn align<'a>(
    predictions: &'a [Prediction],
    golds: &'a [Segment],
) -> Result<Vec<(&'a Prediction, &'a Segment, &'a GoldPair)>, EvalError> {
    let mut by_id: HashMap<&str, &Segment> = HashMap::with_capacity(golds.len());
    for seg in golds {
        if by_id.insert(seg.id.as_str(), seg).is_some() {
            return Err(EvalError::DuplicateId(seg.id.clone()));
        }
    }
    let mut seen = HashSet::with_capacity(predictions.len());
    let mut rows = Vec::with_capacity(predictions.len());
    for pred in predictions {
        if !seen.insert(pred.id.as_str()) {
            return Err(EvalError::DuplicateId(pred.id.clone()));
        }
        let seg = by_id
            .get(pred.id.as_str())
            .ok_or_else(|| EvalError::IdMismatch(format!("prediction id {} has no gold row", pred.id)))?;
        let gold = seg.gold.as_ref().ok_or_else(|| EvalError::MissingGold(seg.id.clone()))?;
        rows.push((pred, *seg, gold));
    }
    if let Some(missing) = golds.iter().find(|s| !seen.contains(s.id.as_str())) {
        return Err(EvalError::IdMismatch(format!("gold id {} has no prediction", missing.id)));
    }
    rows.sort_by(|a, b| a.1.id.cmp(&b.1.id));
    Ok(rows)
}

/// Pooled token-level scoring (the canonical metric).
pub fn score(predictions: &[Prediction], golds: &[Segment]) -> Result<EvalReport, EvalError> {
    score_with(predictions, golds, MetricMode::Pooled)
}

/// Scores predictions against gold rows aligned by id.
///
/// Each text token is labelled C/E/O on both sides (predicted strings are
/// located verbatim; strings that cannot be located contribute O). Per-class
/// precision/recall/F1 come from the confusion counts; the weighted scores
/// average them by gold support. Exact match compares trimmed strings,
/// case-sensitively.
pub fn score_with(
    predictions: &[Prediction],
    golds: &[Segment],
    mode: MetricMode,
) -> Result<EvalReport, EvalError> {
    let rows = align(predictions, golds)?;
    let outcomes = rows
        .iter()
        .map(|(p, s, g)| score_row(p, s, g))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pooled = Confusion::default();
    for o in &outcomes {
        pooled.add(&o.confusion);
    }
    let (mut classes, mut weighted) = pooled.metrics();

    if mode == MetricMode::PerRowMacro && !outcomes.is_empty() {
        let n = outcomes.len() as f64;
        let mut sums = [[0.0f64; 3]; 3];
        let mut wsum = [0.0f64; 3];
        for o in &outcomes {
            let (cls, w) = o.confusion.metrics();
            for (k, c) in cls.iter().enumerate() {
                sums[k][0] += c.precision;
                sums[k][1] += c.recall;
                sums[k][2] += c.f1;
            }
            wsum[0] += w.precision;
            wsum[1] += w.recall;
            wsum[2] += w.f1;
        }
        for (k, c) in classes.iter_mut().enumerate() {
            c.precision = sums[k][0] / n;
            c.recall = sums[k][1] / n;
            c.f1 = sums[k][2] / n;
        }
        weighted = Prf {
            precision: wsum[0] / n,
            recall: wsum[1] / n,
            f1: wsum[2] / n,
        };
    }

    let count = |f: fn(&RowOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let n_segments = outcomes.len();
    let [cause, effect, other] = classes;
    debug_assert_eq!(TokenLabel::O.index(), 2);
    Ok(EvalReport {
        metric: mode,
        cause,
        effect,
        other,
        weighted,
        exact_match: if n_segments == 0 {
            0.0
        } else {
            count(|o| o.exact) as f64 / n_segments as f64
        },
        n_segments,
        n_parse_failed: count(|o| o.parse_failed),
        n_not_grounded: count(|o| o.not_grounded),
        n_overflow_cause: count(|o| o.overflow_cause),
        n_overflow_effect: count(|o| o.overflow_effect),
        n_swapped: count(|o| o.swapped),
        n_label_conflicts: outcomes.iter().map(|o| o.conflicts).sum(),
    })
}
