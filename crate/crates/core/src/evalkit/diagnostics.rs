//! Error-category detectors: cause/effect swaps and text overflow.

use std::collections::HashSet;

/// Jaccard similarity of the whitespace-token sets of `a` and `b`.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let a: HashSet<&str> = a.split_whitespace().collect();
    let b: HashSet<&str> = b.split_whitespace().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Whether the predicted pair looks like the gold pair with roles exchanged.
///
/// Each side compares its token overlap with the opposite gold role against
/// the same gold role. A swap needs one side to strictly prefer the opposite
/// role and the other side not to prefer its own role. Returns false when
/// either predicted string is empty.
pub fn detect_swap(pred_cause: &str, pred_effect: &str, gold_cause: &str, gold_effect: &str) -> bool {
    if pred_cause.trim().is_empty() || pred_effect.trim().is_empty() {
        return false;
    }
    let cause_side = token_jaccard(pred_cause, gold_effect) - token_jaccard(pred_cause, gold_cause);
    let effect_side = token_jaccard(pred_effect, gold_cause) - token_jaccard(pred_effect, gold_effect);
    (cause_side > 0.0 && effect_side >= 0.0) || (effect_side > 0.0 && cause_side >= 0.0)
}

const TERMINAL_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?'];

/// Whether `pred` contains the gold span plus extra text.
///
/// True when the trimmed gold text, ignoring its trailing punctuation, occurs
/// in the trimmed prediction and the prediction is strictly longer than the
/// gold text. A prediction shorter than gold is a truncation, not overflow.
pub fn detect_overflow(pred: &str, gold: &str) -> bool {
    let pred = pred.trim();
    let gold = gold.trim();
    let core = gold.trim_end_matches(TERMINAL_PUNCT).trim_end();
    if pred.is_empty() || core.is_empty() {
        return false;
    }
    pred.chars().count() > gold.chars().count() && pred.contains(core)
}
