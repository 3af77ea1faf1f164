//! Sentence labelling: Decision and Rationale, independently.

mod adapter;
mod lexicon;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::preprocess::SentenceUnit;

pub use adapter::{AdapterClassifier, DEFAULT_TIMEOUT};
pub use lexicon::{Lexicon, LexiconError, BUILTIN_LEXICON};

/// The two binary labels of a sentence. All four combinations are valid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVerdict {
    pub decision: bool,
    pub rationale: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledSentence {
    #[serde(flatten)]
    pub unit: SentenceUnit,
    #[serde(flatten)]
    pub verdict: LabelVerdict,
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("cannot classify an empty sentence")]
    EmptyInput,
    #[error("classifier adapter `{command}` unavailable: {reason}")]
    AdapterUnavailable { command: String, reason: String },
    #[error("classifier adapter exited (status {status:?}) after {} replies", partial.len())]
    AdapterCrashed {
        status: Option<i32>,
        partial: Vec<LabelVerdict>,
    },
    #[error("classifier adapter protocol error: {reason}")]
    AdapterProtocol {
        reason: String,
        partial: Vec<LabelVerdict>,
    },
    #[error("classifier adapter timed out waiting for reply {index}")]
    Timeout {
        index: usize,
        partial: Vec<LabelVerdict>,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

impl ClassifyError {
    /// Verdicts received before the failure, if any.
    pub fn partial(&self) -> &[LabelVerdict] {
        match self {
            Self::AdapterCrashed { partial, .. }
            | Self::AdapterProtocol { partial, .. }
            | Self::Timeout { partial, .. } => partial,
            _ => &[],
        }
    }
}

/// Which classifier to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierSpec {
    /// Keyword baseline; `None` uses the built-in lexicon file.
    Lexicon { lexicon_path: Option<PathBuf> },
    /// External process implementing the adapter protocol.
    Adapter { command: String },
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self::Lexicon { lexicon_path: None }
    }
}

impl ClassifierSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Lexicon { .. } => "builtin-lexicon",
            Self::Adapter { .. } => "external-adapter",
        }
    }
}

impl std::str::FromStr for ClassifierSpec {
    type Err = String;

    /// `lexicon`, `lexicon:<path>` or `adapter:<command line>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "lexicon" {
            return Ok(Self::default());
        }
        if let Some(path) = s.strip_prefix("lexicon:") {
            return Ok(Self::Lexicon {
                lexicon_path: Some(PathBuf::from(path)),
            });
        }
        match s.strip_prefix("adapter:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(Self::Adapter {
                command: cmd.to_string(),
            }),
            Some(_) => Err("adapter classifier needs a command: adapter:<cmd>".into()),
            None => Err(format!(
                "unknown classifier `{s}` (expected lexicon, lexicon:<path> or adapter:<cmd>)"
            )),
        }
    }
}

pub trait SentenceClassifier: Send + Sync {
    fn kind(&self) -> &'static str;

    /// One verdict per input, in input order.
    fn classify_units(&self, units: &[SentenceUnit]) -> Result<Vec<LabelVerdict>, ClassifyError>;
}

impl SentenceClassifier for Lexicon {
    fn kind(&self) -> &'static str {
        "builtin-lexicon"
    }

    fn classify_units(&self, units: &[SentenceUnit]) -> Result<Vec<LabelVerdict>, ClassifyError> {
        units
            .iter()
            .map(|u| {
                if u.text.trim().is_empty() {
                    Err(ClassifyError::EmptyInput)
                } else {
                    Ok(self.classify(&u.text))
                }
            })
            .collect()
    }
}

impl SentenceClassifier for AdapterClassifier {
    fn kind(&self) -> &'static str {
        "external-adapter"
    }

    fn classify_units(&self, units: &[SentenceUnit]) -> Result<Vec<LabelVerdict>, ClassifyError> {
        AdapterClassifier::classify_units(self, units)
    }
}

pub fn build_classifier(spec: &ClassifierSpec) -> Result<Arc<dyn SentenceClassifier>, ClassifyError> {
    Ok(match spec {
        ClassifierSpec::Lexicon { lexicon_path: None } => Arc::new(Lexicon::builtin()),
        ClassifierSpec::Lexicon {
            lexicon_path: Some(path),
        } => Arc::new(Lexicon::load(path)?),
        ClassifierSpec::Adapter { command } => Arc::new(AdapterClassifier::new(command)?),
    })
}

pub fn classify_sentence(text: &str, spec: &ClassifierSpec) -> Result<LabelVerdict, ClassifyError> {
    if text.trim().is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let unit = SentenceUnit {
        text: text.to_string(),
        index: 0,
        total: 1,
    };
    let verdicts = build_classifier(spec)?.classify_units(std::slice::from_ref(&unit))?;
    Ok(verdicts[0])
}

pub fn classify_batch(
    sentences: Vec<SentenceUnit>,
    classifier: &dyn SentenceClassifier,
) -> Result<Vec<LabelledSentence>, ClassifyError> {
    let verdicts = classifier.classify_units(&sentences)?;
    debug_assert_eq!(verdicts.len(), sentences.len());
    Ok(sentences
        .into_iter()
        .zip(verdicts)
        .map(|(unit, verdict)| LabelledSentence { unit, verdict })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(text: &str, index: usize, total: usize) -> SentenceUnit {
        SentenceUnit {
            text: text.into(),
            index,
            total,
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("lexicon".parse::<ClassifierSpec>(), Ok(ClassifierSpec::default()));
        assert_eq!(
            "adapter:python3 model.py --fast".parse::<ClassifierSpec>(),
            Ok(ClassifierSpec::Adapter {
                command: "python3 model.py --fast".into()
            })
        );
        assert!("adapter:".parse::<ClassifierSpec>().is_err());
        assert!("neural".parse::<ClassifierSpec>().is_err());
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            classify_sentence("  ", &ClassifierSpec::default()),
            Err(ClassifyError::EmptyInput)
        ));
    }

    #[test]
    fn empty_batch() {
        let out = classify_batch(Vec::new(), &Lexicon::builtin()).unwrap();
        assert!(out.is_empty());
        let adapter = AdapterClassifier::new("/nonexistent/adapter").unwrap();
        assert!(classify_batch(Vec::new(), &adapter).unwrap().is_empty());
    }

    #[test]
    fn missing_adapter_program() {
        let adapter = AdapterClassifier::new("/nonexistent/adapter --flag").unwrap();
        assert!(matches!(
            adapter.preflight(),
            Err(ClassifyError::AdapterUnavailable { .. })
        ));
        assert!(matches!(
            adapter.classify_units(&[unit("Fix it.", 0, 1)]),
            Err(ClassifyError::AdapterUnavailable { .. })
        ));
        assert!(AdapterClassifier::new("sh").unwrap().preflight().is_ok());
    }

    proptest! {
        #[test]
        fn lexicon_batch_matches_single(texts in proptest::collection::vec("[A-Za-z]{1,8}( [a-z]{1,8}){0,6}\\.", 0..20)) {
            let lex = Lexicon::builtin();
            let units: Vec<_> = texts.iter().enumerate().map(|(i, t)| unit(t, i, texts.len())).collect();
            let batch = classify_batch(units.clone(), &lex).unwrap();
            prop_assert_eq!(batch.len(), units.len());
            for (b, u) in batch.iter().zip(&units) {
                prop_assert_eq!(&b.unit, u);
                prop_assert_eq!(b.verdict, classify_sentence(&u.text, &ClassifierSpec::default()).unwrap());
            }
            prop_assert_eq!(classify_batch(units, &lex).unwrap(), batch);
        }
    }
}
