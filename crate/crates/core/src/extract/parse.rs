//! Lenient parsing of generated `{'Cause': ..., 'Effect': ...}` answers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseStatus {
    /// Both fields found and non-empty.
    Full,
    /// Exactly one field non-empty.
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionCandidate {
    pub cause_text: String,
    pub effect_text: String,
    pub parse_status: ParseStatus,
    /// The region of the raw output the fields were read from.
    pub raw_excerpt: String,
}

impl ExtractionCandidate {
    pub fn new(cause: String, effect: String, raw_excerpt: String) -> Self {
        let parse_status = match (cause.is_empty(), effect.is_empty()) {
            (false, false) => ParseStatus::Full,
            (true, true) => ParseStatus::Failed,
            _ => ParseStatus::Partial,
        };
        ExtractionCandidate {
            cause_text: cause,
            effect_text: effect,
            parse_status,
            raw_excerpt,
        }
    }

    pub fn failed() -> Self {
        Self::new(String::new(), String::new(), String::new())
    }
}

/// Canonical answer serialization, matching the output stanza of the prompts.
/// Backslashes and single quotes inside values are backslash-escaped.
pub fn format_answer(cause: &str, effect: &str) -> String {
    fn esc(s: &str) -> String {
        s.replace('\\', "\\\\").replace('\'', "\\'")
    }
    format!("{{'Cause': '{}', 'Effect': '{}'}}", esc(cause), esc(effect))
}

#[derive(Default)]
struct Fields {
    cause: Option<String>,
    effect: Option<String>,
}

impl Fields {
    fn any(&self) -> bool {
        self.cause.is_some() || self.effect.is_some()
    }

    fn set(&mut self, key: &str, value: String) {
        let slot = if key.eq_ignore_ascii_case("cause") {
            &mut self.cause
        } else if key.eq_ignore_ascii_case("effect") {
            &mut self.effect
        } else {
            return;
        };
        if slot.is_none() {
            *slot = Some(value);
        }
    }

    fn into_candidate(self, excerpt: String) -> ExtractionCandidate {
        ExtractionCandidate::new(
            self.cause.map(|s| s.trim().to_string()).unwrap_or_default(),
            self.effect.map(|s| s.trim().to_string()).unwrap_or_default(),
            excerpt,
        )
    }
}

/// Extracts cause/effect strings from a raw generation.
///
/// Tries every balanced `{...}` block in order and takes the first that
/// yields a Cause or Effect key (case-insensitive; values single-, double- or
/// un-quoted). Falls back to `Cause:` / `Effect:` line prefixes. Never fails:
/// unusable output yields [`ParseStatus::Failed`].
pub fn parse_response(raw: &str) -> ExtractionCandidate {
    let chars: Vec<char> = raw.chars().collect();
    for open in (0..chars.len()).filter(|&i| chars[i] == '{') {
        let Some(close) = matching_brace(&chars, open) else {
            continue;
        };
        let mut fields = Fields::default();
        parse_object(&chars[open + 1..close], &mut fields);
        if fields.any() {
            return fields.into_candidate(chars[open..=close].iter().collect());
        }
    }
    parse_lines(raw)
}

fn matching_brace(chars: &[char], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate().skip(open) {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn skip_ws(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

fn is_quote(c: char) -> bool {
    c == '\'' || c == '"'
}

/// True when position `i` (just past a closing-quote candidate) looks like the
/// end of a value: `,` followed by another key, or the end of the object.
fn ends_value(chars: &[char], i: usize) -> bool {
    let j = skip_ws(chars, i);
    match chars.get(j) {
        None | Some('}') => true,
        Some(',') => {
            let k = skip_ws(chars, j + 1);
            match chars.get(k) {
                None | Some('}') => true,
                Some(&c) if is_quote(c) => true,
                Some(&c) if c.is_alphabetic() => {
                    let mut e = k;
                    while e < chars.len() && (chars[e].is_alphanumeric() || chars[e] == '_') {
                        e += 1;
                    }
                    chars.get(skip_ws(chars, e)) == Some(&':')
                }
                _ => false,
            }
        }
        _ => false,
    }
}

/// Reads a quoted string starting at `start` (the opening quote). Returns the
/// decoded value and the index after the closing quote.
fn read_quoted(chars: &[char], start: usize, as_value: bool) -> (String, usize) {
    let q = chars[start];
    let mut out = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() {
            let n = chars[i + 1];
            i += 2;
            match n {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                '\\' | '\'' | '"' | '/' => out.push(n),
                'u' if i + 4 <= chars.len() => {
                    let hex: String = chars[i..i + 4].iter().collect();
                    match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                        Some(ch) => {
                            out.push(ch);
                            i += 4;
                        }
                        None => {
                            out.push('\\');
                            out.push('u');
                        }
                    }
                }
                other => {
                    out.push('\\');
                    out.push(other);
                }
            }
            continue;
        }
        if c == q && (!as_value || ends_value(chars, i + 1)) {
            return (out, i + 1);
        }
        out.push(c);
        i += 1;
    }
    // unterminated: keep what was read
    (out, chars.len())
}

/// Bare value: everything up to the next `, <key>:` or the end of the object.
fn read_bare(chars: &[char], start: usize) -> (String, usize) {
    let mut i = start;
    while i < chars.len() {
        if chars[i] == ',' && ends_value(chars, i) {
            break;
        }
        i += 1;
    }
    let value: String = chars[start..i].iter().collect();
    (value.trim().to_string(), i)
}

fn skip_nested(chars: &[char], start: usize, open: char, close: char) -> usize {
    let mut depth = 0usize;
    for (i, &c) in chars.iter().enumerate().skip(start) {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth == 0 {
                return i + 1;
            }
        }
    }
    chars.len()
}

/// Walks `key: value` pairs of an object body (braces already stripped).
fn parse_object(body: &[char], fields: &mut Fields) {
    let mut i = 0;
    loop {
        i = skip_ws(body, i);
        while i < body.len() && body[i] == ',' {
            i = skip_ws(body, i + 1);
        }
        if i >= body.len() {
            return;
        }
        let key = if is_quote(body[i]) {
            let (k, next) = read_quoted(body, i, false);
            i = next;
            k
        } else {
            let start = i;
            while i < body.len() && body[i] != ':' && !body[i].is_whitespace() {
                i += 1;
            }
            body[start..i].iter().collect()
        };
        i = skip_ws(body, i);
        if body.get(i) != Some(&':') {
            return;
        }
        i = skip_ws(body, i + 1);
        let Some(&first) = body.get(i) else {
            fields.set(key.trim(), String::new());
            return;
        };
        match first {
            '{' => {
                let end = skip_nested(body, i, '{', '}');
                let inner_end = end.saturating_sub(1).max(i + 1);
                parse_object(&body[i + 1..inner_end], fields);
                i = end;
            }
            '[' => i = skip_nested(body, i, '[', ']'),
            c if is_quote(c) => {
                let (value, next) = read_quoted(body, i, true);
                fields.set(key.trim(), value);
                i = next;
            }
            _ => {
                let (value, next) = read_bare(body, i);
                fields.set(key.trim(), value);
                i = next;
            }
        }
    }
}

/// Matches `label` at the start of a line, allowing markdown decoration and a
/// quoted label: `Cause:`, `**Cause**:`, `- 'Cause': ...`.
fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let line = line.trim_start_matches(|c: char| {
        c.is_whitespace() || matches!(c, '-' | '*' | '#' | '>' | '{' | '\'' | '"')
    });
    let head = line.get(..label.len())?;
    if !head.eq_ignore_ascii_case(label) {
        return None;
    }
    let rest = line[label.len()..].trim_start_matches(['*', '\'', '"', ' ']);
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim_start_matches('*'))
}

fn clean_line_value(v: &str) -> String {
    let v = v.trim().trim_end_matches(',').trim();
    let unquoted = v
        .strip_prefix('\'')
        .and_then(|s| s.strip_suffix('\''))
        .or_else(|| v.strip_prefix('"').and_then(|s| s.strip_suffix('"')))
        .unwrap_or(v);
    unquoted.trim().to_string()
}

fn parse_lines(raw: &str) -> ExtractionCandidate {
    let mut fields = Fields::default();
    let mut excerpt = Vec::new();
    for line in raw.lines() {
        for label in ["cause", "effect"] {
            if let Some(v) = strip_label(line, label) {
                fields.set(label, clean_line_value(v));
                excerpt.push(line);
            }
        }
    }
    if fields.any() {
        fields.into_candidate(excerpt.join("\n"))
    } else {
        ExtractionCandidate::failed()
    }
}
