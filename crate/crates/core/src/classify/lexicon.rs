//! Deterministic keyword baseline for the two sentence labels.
//!
//! Decision: the first verb-like word is an imperative change verb, or a
//! subsystem-prefixed subject line ("mm/slob: fix ...") contains one anywhere,
//! or a lead phrase is followed by a conjugated verb ("this patch fixes").
//! Rationale: any causal, justificatory or value-judgment cue.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::LabelVerdict;

pub const BUILTIN_LEXICON: &str = include_str!("../../lexicon/default.txt");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    decision_verbs: HashSet<String>,
    decision_leads: Vec<Vec<String>>,
    skip: HashSet<String>,
    rationale_cues: Vec<Vec<String>>,
    since_temporal: HashSet<String>,
}

static SUBJECT_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\w.+/-]+(?:,\s*[\w.+/-]+)*:\s+\S").unwrap());

impl Lexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("built-in lexicon parses")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::default();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let words = tokenize(line);
            if words.is_empty() {
                continue;
            }
            let single = |words: &[String]| -> Result<String, LexiconError> {
                match words {
                    [w] => Ok(w.clone()),
                    _ => Err(LexiconError::Syntax {
                        line: n + 1,
                        reason: format!("`{line}` must be a single word in this section"),
                    }),
                }
            };
            match section.as_deref() {
                Some("decision") => {
                    lex.decision_verbs.insert(single(&words)?);
                }
                Some("decision-lead") => lex.decision_leads.push(words),
                Some("skip") => {
                    lex.skip.insert(single(&words)?);
                }
                Some("rationale") => lex.rationale_cues.push(words),
                Some("since-temporal") => {
                    lex.since_temporal.insert(single(&words)?);
                }
                Some(other) => {
                    return Err(LexiconError::Syntax {
                        line: n + 1,
                        reason: format!("unknown section [{other}]"),
                    })
                }
                None => {
                    return Err(LexiconError::Syntax {
                        line: n + 1,
                        reason: "entry before the first [section]".into(),
                    })
                }
            }
        }
        Ok(lex)
    }

    pub fn classify(&self, text: &str) -> LabelVerdict {
        let words = tokenize(text);
        LabelVerdict {
            decision: self.is_decision(text, &words),
            rationale: self.is_rationale(&words),
        }
    }

    fn is_decision(&self, text: &str, words: &[String]) -> bool {
        if let Some(m) = SUBJECT_PREFIX.find(text.trim_start()) {
            let rest = &text.trim_start()[m.end() - 1..];
            if tokenize(rest).iter().any(|w| self.decision_verbs.contains(w)) {
                return true;
            }
        }
        let first = words.iter().find(|w| !self.skip.contains(w.as_str()));
        if first.is_some_and(|w| self.decision_verbs.contains(w)) {
            return true;
        }
        self.decision_leads.iter().any(|lead| {
            find_phrase(words, lead).any(|at| {
                words
                    .get(at + lead.len())
                    .is_some_and(|next| self.is_conjugated_verb(next))
            })
        })
    }

    fn is_conjugated_verb(&self, word: &str) -> bool {
        let known = |stem: &str| self.decision_verbs.contains(stem);
        if let Some(stem) = word.strip_suffix("ies") {
            if known(&format!("{stem}y")) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix("es") {
            if known(stem) {
                return true;
            }
        }
        word.strip_suffix('s').is_some_and(known)
    }

    fn is_rationale(&self, words: &[String]) -> bool {
        self.rationale_cues.iter().any(|cue| {
            if cue.len() == 1 && cue[0] == "since" {
                return find_phrase(words, cue).any(|at| self.causal_since(words, at));
            }
            find_phrase(words, cue).next().is_some()
        })
    }

    fn causal_since(&self, words: &[String], at: usize) -> bool {
        match words.get(at + 1) {
            None => false,
            Some(next) => {
                let versionish = next.starts_with(|c: char| c.is_ascii_digit())
                    || (next.len() > 1
                        && next.starts_with('v')
                        && next[1..].starts_with(|c: char| c.is_ascii_digit()));
                !versionish && !self.since_temporal.contains(next)
            }
        }
    }
}

fn find_phrase<'a>(words: &'a [String], phrase: &'a [String]) -> impl Iterator<Item = usize> + 'a {
    let n = phrase.len();
    (0..words.len().saturating_sub(n.saturating_sub(1)))
        .filter(move |&i| n > 0 && i + n <= words.len() && words[i..i + n] == *phrase)
}

/// Lowercased words: runs of alphanumerics and apostrophes.
pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}
