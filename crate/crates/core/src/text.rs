//! Tokenization and character-offset helpers shared by every module.
//!
//! Offsets throughout the crate count Unicode scalar values, not bytes.

/// A whitespace-delimited token with character offsets (end exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Splits `text` into maximal runs of non-whitespace characters.
pub fn tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut current: Option<(usize, usize)> = None; // (byte start, char start)
    let mut char_idx = 0;
    for (byte_idx, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some((b, s)) = current.take() {
                out.push(Token {
                    text: &text[b..byte_idx],
                    start: s,
                    end: char_idx,
                });
            }
        } else if current.is_none() {
            current = Some((byte_idx, char_idx));
        }
        char_idx += 1;
    }
    if let Some((b, s)) = current {
        out.push(Token {
            text: &text[b..],
            start: s,
            end: char_idx,
        });
    }
    out
}

/// Number of whitespace tokens in `text`.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Length in characters.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Substring by character offsets. Panics when the range is out of bounds.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    assert!(start <= end, "inverted char range {start}..{end}");
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = indices
        .nth(start)
        .unwrap_or_else(|| panic!("char offset {start} out of bounds"));
    let b_end = if end == start {
        b_start
    } else {
        indices
            .nth(end - start - 1)
            .unwrap_or_else(|| panic!("char offset {end} out of bounds"))
    };
    &text[b_start..b_end]
}

/// Converts a byte offset on a char boundary into a character offset.
pub fn byte_to_char(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Length-preserving case fold: a character whose lowercase form is a single
/// character maps to it, anything else (e.g. `İ`) maps to itself.
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}
