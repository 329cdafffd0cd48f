//! Rule-based baseline: explicit causal connectives, else sentence order.

use super::parse::ExtractionCandidate;

/// Connectives in priority order, with whether the text after the cue is the
/// cause (`true`) or the effect (`false`).
pub const CUES: [(&str, bool); 7] = [
    ("as a result of", true),
    ("due to", true),
    ("caused by", true),
    ("because of", true),
    ("because", true),
    ("led to", false),
    ("resulting in", false),
];

/// Splits `text` into cause and effect without a model.
///
/// The first cue of [`CUES`] found (case-insensitive, whole words) splits the
/// text around it. Without a cue, the first sentence is taken as the cause
/// and the second sentence as the effect, since an earlier event is read as
/// the cause of a later one.
pub fn cue_baseline(text: &str) -> ExtractionCandidate {
    let lower = text.to_ascii_lowercase();
    for (cue, cause_follows) in CUES {
        if let Some(at) = find_word(&lower, cue) {
            let before = text[..at].trim().to_string();
            let after = text[at + cue.len()..].trim().to_string();
            let excerpt = text[at..at + cue.len()].to_string();
            return if cause_follows {
                ExtractionCandidate::new(after, before, excerpt)
            } else {
                ExtractionCandidate::new(before, after, excerpt)
            };
        }
    }

    let first_end = sentence_end(text, 0);
    let cause = text[..first_end].trim().to_string();
    let second_end = sentence_end(text, first_end);
    let effect = text[first_end..second_end].trim().to_string();
    ExtractionCandidate::new(cause, effect, String::new())
}

fn find_word(hay: &str, needle: &str) -> Option<usize> {
    let bytes = hay.as_bytes();
    hay.match_indices(needle).map(|(i, _)| i).find(|&i| {
        let before_ok = i == 0 || !is_word_byte(bytes[i - 1]);
        let end = i + needle.len();
        let after_ok = end == bytes.len() || !is_word_byte(bytes[end]);
        before_ok && after_ok
    })
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Byte offset just past the sentence starting at `from`: after the first
/// `.`, `!` or `?` that is followed by whitespace, or the end of the text.
fn sentence_end(text: &str, from: usize) -> usize {
    let mut chars = text[from..].char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    return from + i + c.len_utf8();
                }
            }
        }
    }
    text.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ParseStatus;

    fn split(text: &str) -> (String, String, ParseStatus) {
        let c = cue_baseline(text);
        (c.cause_text, c.effect_text, c.parse_status)
    }

    #[test]
    fn cause_follows_cue() {
        assert_eq!(
            split("A happened due to B."),
            ("B.".into(), "A happened".into(), ParseStatus::Full)
        );
        assert_eq!(cue_baseline("A happened due to B.").raw_excerpt, "due to");
    }

    #[test]
    fn effect_follows_cue() {
        assert_eq!(split("X led to Y."), ("X".into(), "Y.".into(), ParseStatus::Full));
        assert_eq!(
            split("Heavy rain, resulting in floods."),
            ("Heavy rain,".into(), "floods.".into(), ParseStatus::Full)
        );
    }

    #[test]
    fn priority_follows_list_order() {
        // "because of" outranks "because" and "led to"
        assert_eq!(
            split("Costs led to losses because of the strike."),
            ("the strike.".into(), "Costs led to losses".into(), ParseStatus::Full)
        );
        assert_eq!(
            split("Shares Fell As A Result Of weak demand"),
            ("weak demand".into(), "Shares Fell".into(), ParseStatus::Full)
        );
    }

    #[test]
    fn cues_match_whole_words() {
        // "overdue to" must not fire "due to"; falls back to sentences
        assert_eq!(
            split("Payment overdue tomorrow. Fees apply."),
            ("Payment overdue tomorrow.".into(), "Fees apply.".into(), ParseStatus::Full)
        );
    }

    #[test]
    fn chronological_fallback() {
        assert_eq!(
            split("Things got worse when the Wall came down. GDP fell 20% between 1988 and 1993."),
            (
                "Things got worse when the Wall came down.".into(),
                "GDP fell 20% between 1988 and 1993.".into(),
                ParseStatus::Full
            )
        );
    }

    #[test]
    fn fallback_takes_only_the_next_sentence() {
        let text = "Things got worse when the Wall came down. GDP fell 20% between 1988 and 1993. There were suddenly hundreds of thousands of unemployed in a country that, under Communism, had had full employment.";
        let (cause, effect, _) = split(text);
        assert_eq!(cause, "Things got worse when the Wall came down.");
        assert_eq!(effect, "GDP fell 20% between 1988 and 1993.");
    }

    #[test]
    fn single_sentence_is_partial() {
        assert_eq!(
            split("Conduent has a consensus target price of $12.64."),
            (
                "Conduent has a consensus target price of $12.64.".into(),
                String::new(),
                ParseStatus::Partial
            )
        );
        // "Upcoming.Co.Uk" is not a sentence boundary
        assert_eq!(split("Upcoming.Co.Uk reports.").1, "");
    }

    #[test]
    fn cue_at_text_edge_is_partial() {
        assert_eq!(
            split("due to rising rates"),
            ("rising rates".into(), String::new(), ParseStatus::Partial)
        );
    }
}
