//! Mapping generated strings back onto verbatim spans of the source text.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::distance::{levenshtein, PatternDistances};
use crate::text::{byte_to_char, fold_char};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchMethod {
    Exact,
    CaseFold,
    WhitespaceNorm,
    Fuzzy,
}

/// A contiguous span of the source. `start`/`end` are character offsets and
/// `matched_text` is always exactly `source[start..end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedSpan {
    pub start: usize,
    pub end: usize,
    pub matched_text: String,
    pub method: MatchMethod,
    /// Edit distance between candidate and `matched_text`, divided by the
    /// longer of the two lengths.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grounding {
    Grounded(GroundedSpan),
    /// No window came within the fuzzy threshold. `best_score` is the closest
    /// window considered, if any window fit the length bounds.
    NotGrounded { best_score: Option<f64> },
}

impl Grounding {
    pub fn span(&self) -> Option<&GroundedSpan> {
        match self {
            Grounding::Grounded(s) => Some(s),
            Grounding::NotGrounded { .. } => None,
        }
    }

    pub fn into_span(self) -> Option<GroundedSpan> {
        match self {
            Grounding::Grounded(s) => Some(s),
            Grounding::NotGrounded { .. } => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroundError {
    #[error("candidate text is empty")]
    EmptyCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingConfig {
    /// Largest normalized edit distance accepted by the fuzzy stage.
    pub fuzzy_threshold: f64,
    /// Fuzzy windows range over `len * (1 ± window_slack)` characters.
    pub window_slack: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            fuzzy_threshold: 0.35,
            window_slack: 0.30,
        }
    }
}

/// [`ground_span_with`] under the default thresholds.
pub fn ground_span(candidate: &str, source: &str) -> Result<Grounding, GroundError> {
    ground_span_with(candidate, source, &GroundingConfig::default())
}

/// Finds the span of `source` that `candidate` refers to.
///
/// Stages, first hit wins: exact substring, case-folded substring,
/// whitespace-collapsed substring (case-sensitive, then folded), then the
/// fuzzy window search. Within a stage the leftmost match is taken.
pub fn ground_span_with(
    candidate: &str,
    source: &str,
    config: &GroundingConfig,
) -> Result<Grounding, GroundError> {
    if candidate.trim().is_empty() {
        return Err(GroundError::EmptyCandidate);
    }
    let src: Vec<char> = source.chars().collect();
    let cand: Vec<char> = candidate.chars().collect();

    if let Some(byte) = source.find(candidate) {
        let start = byte_to_char(source, byte);
        return Ok(Grounding::Grounded(make_span(
            &src,
            &cand,
            start,
            start + cand.len(),
            MatchMethod::Exact,
        )));
    }

    let folded_src: String = src.iter().map(|&c| fold_char(c)).collect();
    let folded_cand: String = cand.iter().map(|&c| fold_char(c)).collect();
    if let Some(byte) = folded_src.find(&folded_cand) {
        let start = byte_to_char(&folded_src, byte);
        return Ok(Grounding::Grounded(make_span(
            &src,
            &cand,
            start,
            start + cand.len(),
            MatchMethod::CaseFold,
        )));
    }

    let (norm_src, src_map) = collapse_whitespace(&src);
    let (norm_cand, _) = collapse_whitespace(&cand);
    let norm_cand = trim_chars(&norm_cand);
    for fold in [false, true] {
        let hay: String = norm_src.iter().map(|&c| if fold { fold_char(c) } else { c }).collect();
        let needle: String = norm_cand.iter().map(|&c| if fold { fold_char(c) } else { c }).collect();
        if let Some(byte) = hay.find(&needle) {
            let ns = byte_to_char(&hay, byte);
            let ne = ns + norm_cand.len();
            let start = src_map[ns];
            let end = src_map[ne - 1] + 1;
            return Ok(Grounding::Grounded(make_span(
                &src,
                &cand,
                start,
                end,
                MatchMethod::WhitespaceNorm,
            )));
        }
    }

    Ok(fuzzy_search(&cand, &src, config))
}

fn make_span(src: &[char], cand: &[char], start: usize, end: usize, method: MatchMethod) -> GroundedSpan {
    let matched = &src[start..end];
    let score = if method == MatchMethod::Exact {
        0.0
    } else {
        levenshtein(cand, matched) as f64 / cand.len().max(matched.len()) as f64
    };
    GroundedSpan {
        start,
        end,
        matched_text: matched.iter().collect(),
        method,
        score,
    }
}

fn trim_chars(chars: &[char]) -> &[char] {
    let start = chars.iter().position(|c| !c.is_whitespace()).unwrap_or(chars.len());
    let end = chars.iter().rposition(|c| !c.is_whitespace()).map_or(start, |i| i + 1);
    &chars[start..end]
}

/// Collapses whitespace runs to one space. The second vector maps each output
/// position to the source position it came from (the first char of a run).
fn collapse_whitespace(chars: &[char]) -> (Vec<char>, Vec<usize>) {
    let mut out = Vec::with_capacity(chars.len());
    let mut map = Vec::with_capacity(chars.len());
    let mut in_ws = false;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if !in_ws {
                out.push(' ');
                map.push(i);
            }
            in_ws = true;
        } else {
            out.push(c);
            map.push(i);
            in_ws = false;
        }
    }
    (out, map)
}

/// A window's normalized distance kept as an exact fraction so ties compare exactly.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    dist: usize,
    denom: usize,
}

impl Ratio {
    fn cmp(&self, other: &Ratio) -> Ordering {
        (self.dist as u128 * other.denom as u128).cmp(&(other.dist as u128 * self.denom as u128))
    }

    fn value(&self) -> f64 {
        self.dist as f64 / self.denom as f64
    }
}

fn window_bounds(len: usize, slack: f64) -> (usize, usize) {
    let lo = ((1.0 - slack) * len as f64 - 1e-9).ceil().max(1.0) as usize;
    let hi = ((1.0 + slack) * len as f64 + 1e-9).floor() as usize;
    (lo, hi.max(lo))
}

/// Exhaustive search over windows whose length is within the slack of the
/// candidate's. Order: lowest normalized distance, then leftmost start, then
/// shortest window.
fn fuzzy_search(cand: &[char], src: &[char], config: &GroundingConfig) -> Grounding {
    let (lo, hi) = window_bounds(cand.len(), config.window_slack);
    let matcher = PatternDistances::new(cand);
    let mut dists = Vec::with_capacity(hi + 1);
    let mut best: Option<(Ratio, usize, usize)> = None;

    for start in 0..src.len() {
        let max_len = hi.min(src.len() - start);
        if max_len < lo {
            break;
        }
        matcher.prefix_distances(&src[start..start + max_len], &mut dists);
        for (len, &dist) in dists.iter().enumerate().skip(lo) {
            let ratio = Ratio {
                dist,
                denom: cand.len().max(len),
            };
            let better = match &best {
                None => true,
                Some((b, _, _)) => ratio.cmp(b) == Ordering::Less,
            };
            if better {
                best = Some((ratio, start, len));
            }
        }
    }

    match best {
        Some((ratio, start, len)) if ratio.value() <= config.fuzzy_threshold => {
            let end = start + len;
            Grounding::Grounded(GroundedSpan {
                start,
                end,
                matched_text: src[start..end].iter().collect(),
                method: MatchMethod::Fuzzy,
                score: ratio.value(),
            })
        }
        Some((ratio, _, _)) => Grounding::NotGrounded {
            best_score: Some(ratio.value()),
        },
        None => Grounding::NotGrounded { best_score: None },
    }
}
