//! Commit message normalization and rule-based sentence segmentation.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One sentence of a commit message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub text: String,
    /// 0-based position within the commit.
    pub index: usize,
    /// Number of sentences in the commit.
    pub total: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_TRAILER_KEYS: &[&str] = &[
    "Signed-off-by",
    "Acked-by",
    "Reviewed-by",
    "Tested-by",
    "Reported-by",
    "Suggested-by",
    "Co-developed-by",
    "Cc",
    "Link",
    "Fixes",
    "Closes",
    "See-also",
];

pub const DEFAULT_CODE_PREFIXES: &[&str] = &["diff --git", "@@", "+++", "---"];

/// Line-removal rules applied by [`normalize_message_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    /// Trailer keys, compared case-insensitively.
    pub trailer_keys: Vec<String>,
    pub code_prefixes: Vec<String>,
    /// Lines indented by at least this many columns are treated as code.
    /// A tab counts as four columns.
    pub code_indent: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            trailer_keys: DEFAULT_TRAILER_KEYS.iter().map(|s| s.to_string()).collect(),
            code_prefixes: DEFAULT_CODE_PREFIXES.iter().map(|s| s.to_string()).collect(),
            code_indent: 4,
        }
    }
}

impl PreprocessConfig {
    /// Parses a rule file. One directive per line, `#` starts a comment:
    ///
    /// ```text
    /// trailer Signed-off-by
    /// code-prefix @@
    /// indent 4
    /// ```
    ///
    /// A directive kind that appears at least once replaces the default set for
    /// that kind; kinds that never appear keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut trailers = Vec::new();
        let mut prefixes = Vec::new();
        let mut indent = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
                ConfigError::Syntax {
                    line: n + 1,
                    reason: format!("directive `{line}` has no value"),
                }
            })?;
            let value = value.trim();
            match key {
                "trailer" => trailers.push(value.to_string()),
                "code-prefix" => prefixes.push(value.to_string()),
                "indent" => {
                    indent = Some(value.parse().map_err(|_| ConfigError::Syntax {
                        line: n + 1,
                        reason: format!("indent `{value}` is not a number"),
                    })?)
                }
                other => {
                    return Err(ConfigError::Syntax {
                        line: n + 1,
                        reason: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        let mut cfg = Self::default();
        if !trailers.is_empty() {
            cfg.trailer_keys = trailers;
        }
        if !prefixes.is_empty() {
            cfg.code_prefixes = prefixes;
        }
        if let Some(indent) = indent {
            cfg.code_indent = indent;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn is_trailer(&self, line: &str) -> bool {
        let Some((key, _)) = line.split_once(':') else {
            return false;
        };
        let key_ok = key
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
            && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        key_ok && self.trailer_keys.iter().any(|k| k.eq_ignore_ascii_case(key))
    }

    fn is_code(&self, line: &str) -> bool {
        let indent: usize = line
            .chars()
            .take_while(|c| c.is_whitespace())
            .map(|c| if c == '\t' { 4 } else { 1 })
            .sum();
        if self.code_indent > 0 && indent >= self.code_indent {
            return true;
        }
        let trimmed = line.trim_start();
        self.code_prefixes.iter().any(|p| trimmed.starts_with(p.as_str()))
    }

    fn drops_line(&self, line: &str) -> bool {
        let trimmed = line.trim();
        !trimmed.chars().any(char::is_alphabetic)
            || self.is_code(line)
            || self.is_trailer(trimmed)
            || is_url_only(trimmed)
    }
}

fn is_url_only(line: &str) -> bool {
    let mut saw_url = false;
    for token in line.split_whitespace() {
        let t = token.trim_start_matches('<').trim_end_matches(['>', ',', '.']);
        if t.starts_with("http://") || t.starts_with("https://") || t.starts_with("ftp://") {
            saw_url = true;
        } else if !is_footnote_marker(t) {
            return false;
        }
    }
    saw_url
}

fn is_footnote_marker(t: &str) -> bool {
    let t = t.trim_end_matches(':');
    t.len() > 2
        && t.starts_with('[')
        && t.ends_with(']')
        && t[1..t.len() - 1].bytes().all(|b| b.is_ascii_digit())
}

/// [`normalize_message_with`] using the default rules.
pub fn normalize_message(raw: &str) -> String {
    normalize_message_with(raw, &PreprocessConfig::default())
}

/// Strips trailers, code-like lines and URL-only lines, collapses whitespace
/// and joins wrapped lines. Paragraphs in the result are separated by a single
/// blank line.
pub fn normalize_message_with(raw: &str, cfg: &PreprocessConfig) -> String {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let flush = |current: &mut Vec<String>, paragraphs: &mut Vec<String>| {
        if !current.is_empty() {
            paragraphs.push(current.join(" "));
            current.clear();
        }
    };
    let raw = raw.replace("\r\n", "\n").replace('\r', "\n");
    for line in raw.split('\n') {
        if line.trim().is_empty() {
            flush(&mut current, &mut paragraphs);
            continue;
        }
        if cfg.drops_line(line) {
            continue;
        }
        current.push(line.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    flush(&mut current, &mut paragraphs);
    paragraphs.join("\n\n")
}

/// Byte ranges of the sentences of a normalized message, in order.
pub fn sentence_spans(normalized: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for para in normalized.split("\n\n") {
        split_paragraph(para, offset, &mut spans);
        offset += para.len() + 2;
    }
    spans
}

fn split_paragraph(para: &str, base: usize, out: &mut Vec<Range<usize>>) {
    let bytes = para.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if !matches!(bytes[i], b'.' | b'!' | b'?') {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < bytes.len() && matches!(bytes[end], b'.' | b'!' | b'?') {
            end += 1;
        }
        let single_dot = bytes[i] == b'.' && end - i == 1;
        while end < bytes.len() && matches!(bytes[end], b'"' | b'\'' | b')' | b']') {
            end += 1;
        }
        let at_boundary = end == bytes.len() || bytes[end].is_ascii_whitespace();
        if at_boundary && !(single_dot && is_abbreviation(&para[start..i])) {
            push_span(para, base, start, end, out);
            start = end;
        }
        i = end;
    }
    push_span(para, base, start, para.len(), out);
}

fn push_span(para: &str, base: usize, start: usize, end: usize, out: &mut Vec<Range<usize>>) {
    let piece = &para[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if trimmed.chars().any(char::is_alphabetic) {
        let s = base + start + lead;
        out.push(s..s + trimmed.len());
    }
}

const ABBREVIATIONS: &[&str] = &["e.g", "i.e", "etc", "vs", "eg", "ie", "cf"];

/// Whether the token ending right before a period blocks a split.
fn is_abbreviation(before_dot: &str) -> bool {
    let token = before_dot
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '[', '"', '\'']);
    let mut chars = token.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        return c.is_alphabetic();
    }
    let lower = token.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

pub fn segment_sentences(normalized: &str) -> Vec<SentenceUnit> {
    let spans = sentence_spans(normalized);
    let total = spans.len();
    spans
        .into_iter()
        .enumerate()
        .map(|(index, span)| SentenceUnit {
            text: normalized[span].to_string(),
            index,
            total,
        })
        .collect()
}

/// Normalize then segment.
pub fn preprocess(raw: &str, cfg: &PreprocessConfig) -> Vec<SentenceUnit> {
    segment_sentences(&normalize_message_with(raw, cfg))
}
