use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::extract::GroundedSpan;
use crate::text::{char_len, tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenLabel {
    C,
    E,
    O,
}

impl TokenLabel {
    pub const ALL: [TokenLabel; 3] = [TokenLabel::C, TokenLabel::E, TokenLabel::O];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Half-open character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    fn overlap(&self, start: usize, end: usize) -> usize {
        self.end.min(end).saturating_sub(self.start.max(start))
    }
}

impl From<&GroundedSpan> for Span {
    fn from(g: &GroundedSpan) -> Self {
        Span::new(g.start, g.end)
    }
}

/// Labels produced for one text, plus the number of tokens touched by both spans.
pub(crate) struct Labelled {
    pub labels: Vec<TokenLabel>,
    pub conflicts: usize,
}

pub(crate) fn label_tokens(
    text: &str,
    cause: Option<Span>,
    effect: Option<Span>,
) -> Result<Labelled, EvalError> {
    let len = char_len(text);
    for span in [cause, effect].into_iter().flatten() {
        if span.start > span.end || span.end > len {
            return Err(EvalError::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
    }
    let mut conflicts = 0;
    let labels = tokens(text)
        .iter()
        .map(|tok| {
            let c = cause.map_or(0, |s| s.overlap(tok.start, tok.end));
            let e = effect.map_or(0, |s| s.overlap(tok.start, tok.end));
            if c > 0 && e > 0 {
                conflicts += 1;
            }
            match (c, e) {
                (0, 0) => TokenLabel::O,
                (c, e) if c >= e => TokenLabel::C,
                _ => TokenLabel::E,
            }
        })
        .collect();
    Ok(Labelled { labels, conflicts })
}

/// One label per whitespace token of `text`, by character overlap with the
/// spans. A token touching both spans takes the larger overlap, C on ties.
pub fn token_labels(
    text: &str,
    cause: Option<Span>,
    effect: Option<Span>,
) -> Result<Vec<TokenLabel>, EvalError> {
    label_tokens(text, cause, effect).map(|l| l.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenLabel::*;

    #[test]
    fn disjoint_spans() {
        let labels = token_labels("a b c d", Some(Span::new(0, 3)), Some(Span::new(6, 7))).unwrap();
        assert_eq!(labels, vec![C, C, O, E]);
    }

    #[test]
    fn no_spans_all_other() {
        assert_eq!(token_labels("a b c", None, None).unwrap(), vec![O, O, O]);
    }

    #[test]
    fn straddling_token_goes_by_majority() {
        // "abc": two chars inside the cause span, one outside
        assert_eq!(token_labels("abc def", Some(Span::new(0, 2)), None).unwrap(), vec![C, O]);
        // cause covers 1 char, effect 2 chars of the same token
        assert_eq!(
            token_labels("abc", Some(Span::new(0, 1)), Some(Span::new(1, 3))).unwrap(),
            vec![E]
        );
        // tie resolves to C and is counted as a conflict
        let l = label_tokens("abcd", Some(Span::new(0, 2)), Some(Span::new(2, 4))).unwrap();
        assert_eq!(l.labels, vec![C]);
        assert_eq!(l.conflicts, 1);
    }

    #[test]
    fn out_of_bounds() {
        assert!(matches!(
            token_labels("ab", Some(Span::new(0, 3)), None),
            Err(EvalError::SpanOutOfBounds { len: 2, .. })
        ));
    }

    #[test]
    fn length_matches_token_count() {
        let text = " multi  space\ttext \n here ";
        let labels = token_labels(text, Some(Span::new(1, 6)), None).unwrap();
        assert_eq!(labels.len(), crate::text::token_count(text));
    }
}
