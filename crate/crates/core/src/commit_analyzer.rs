//! Scoring of a single commit message against a rationale-density threshold.

use serde::{Deserialize, Serialize};

use crate::classify::{classify_batch, ClassifyError, LabelledSentence, SentenceClassifier};
use crate::metrics::{decision_density, rationale_density, CommitLabelled, Density};
use crate::preprocess::{preprocess, PreprocessConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Rationale density at or above the threshold.
    Success,
    /// Rationale density below the threshold.
    Warning,
    /// The message has no sentences to judge.
    Empty,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Warning => "warning",
            Self::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitReport {
    pub sentences: Vec<LabelledSentence>,
    pub number_of_sentences: usize,
    pub rationale_density: Option<f64>,
    pub decision_density: Option<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// `Warning` iff density < threshold; equality is a success.
pub fn verdict_for(density: &Density, threshold: f64) -> Verdict {
    if density.as_f64() < threshold {
        Verdict::Warning
    } else {
        Verdict::Success
    }
}

pub fn analyze_commit_message(
    raw: &str,
    classifier: &dyn SentenceClassifier,
    preprocess_cfg: &PreprocessConfig,
    threshold: f64,
) -> Result<CommitReport, ClassifyError> {
    let units = preprocess(raw, preprocess_cfg);
    let sentences = classify_batch(units, classifier)?;
    Ok(report_for(sentences, threshold))
}

/// Builds the report for already-labelled sentences of one message.
pub fn report_for(sentences: Vec<LabelledSentence>, threshold: f64) -> CommitReport {
    let labelled = CommitLabelled {
        commit: crate::ingest::Commit {
            sha: String::new(),
            author_id: String::new(),
            author_name: String::new(),
            committed_at: chrono::DateTime::UNIX_EPOCH,
            message: String::new(),
        },
        sentences,
    };
    let rationale = rationale_density(&labelled).ok();
    let decision = decision_density(&labelled).ok();
    let verdict = rationale.map_or(Verdict::Empty, |d| verdict_for(&d, threshold));
    CommitReport {
        number_of_sentences: labelled.sentences.len(),
        sentences: labelled.sentences,
        rationale_density: rationale.map(|d| d.as_f64()),
        decision_density: decision.map(|d| d.as_f64()),
        threshold,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Lexicon;
    use proptest::prelude::*;

    fn run(msg: &str, threshold: f64) -> CommitReport {
        analyze_commit_message(msg, &Lexicon::builtin(), &PreprocessConfig::default(), threshold).unwrap()
    }

    // Lexicon oracle for the sentences below: "Fix ..." is Decision only,
    // "Otherwise ..." / "... because ..." are Rationale, "See ..." is neither.
    const ONE_OF_FOUR: &str = "Fix the leak.\n\nOtherwise boot fails. See the archive. Drop the flag.";
    const TWO_OF_FOUR: &str = "Fix the leak.\n\nOtherwise boot fails. It fails because the lock is held. See the archive.";
    const THREE_OF_FOUR: &str = "Fix the leak because it grows.\n\nOtherwise boot fails. It fails because the lock is held. See the archive.";

    #[test]
    fn threshold_boundaries() {
        let r = run(ONE_OF_FOUR, 0.5);
        assert_eq!((r.number_of_sentences, r.rationale_density, r.verdict), (4, Some(0.25), Verdict::Warning));
        let r = run(TWO_OF_FOUR, 0.5);
        assert_eq!((r.rationale_density, r.verdict), (Some(0.5), Verdict::Success));
        let r = run(THREE_OF_FOUR, 0.5);
        assert_eq!((r.rationale_density, r.verdict), (Some(0.75), Verdict::Success));
    }

    #[test]
    fn empty_message() {
        let r = run("", 0.5);
        assert_eq!(r.number_of_sentences, 0);
        assert_eq!(r.verdict, Verdict::Empty);
        assert_eq!((r.rationale_density, r.decision_density), (None, None));
        assert_eq!(run("Signed-off-by: A <a@b>", 0.5).verdict, Verdict::Empty);
    }

    #[test]
    fn zero_threshold_always_succeeds() {
        assert_eq!(run("See the archive.", 0.0).verdict, Verdict::Success);
    }

    #[test]
    fn densities_match_metrics_module() {
        let r = run("Fix leak. Otherwise boot fails.", 0.5);
        assert_eq!(r.number_of_sentences, 2);
        assert_eq!(r.rationale_density, Some(0.5));
        assert_eq!(r.decision_density, Some(0.5));
        assert_eq!(r.verdict, Verdict::Success);
    }

    proptest! {
        #[test]
        fn verdict_is_monotone(total in 1usize..40, a in 0usize..40, b in 0usize..40, t in 0.0f64..=1.0) {
            let (lo, hi) = (a.min(b).min(total), a.max(b).min(total));
            let vlo = verdict_for(&Density { hits: lo, total }, t);
            let vhi = verdict_for(&Density { hits: hi, total }, t);
            prop_assert!(!(vlo == Verdict::Success && vhi == Verdict::Warning));
            prop_assert_eq!(vlo == Verdict::Warning, (lo as f64 / total as f64) < t);
        }
    }
}
