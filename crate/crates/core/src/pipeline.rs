//! Module analysis end to end: fetch, preprocess, classify, analyze.

use std::sync::Arc;

use chrono::{DateTime, Utc};

use crate::classify::{classify_batch, ClassifyError, SentenceClassifier};
use crate::ingest::{Commit, Fetcher, IngestError, ModuleRef};
use crate::metrics::{CommitLabelled, LabelledDataset};
use crate::preprocess::{preprocess, PreprocessConfig, SentenceUnit};
use crate::report::{build_report, AnalysisReport, ReportError, ReportOptions};

/// Sentences sent to the classifier per call.
const CHUNK: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("classification task failed: {0}")]
    Join(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Fetching { fetched_commits: usize },
    Classifying { classified_sentences: usize, total_sentences: usize },
    Analyzing,
}

pub type ProgressSink = Arc<dyn Fn(Progress) + Send + Sync>;

/// Preprocesses and labels every commit. Sentences are classified in chunks
/// that may span commits; `on_progress` receives the running sentence count.
pub fn label_commits(
    commits: Vec<Commit>,
    api_url: Option<String>,
    fetched_at: Option<DateTime<Utc>>,
    classifier: &dyn SentenceClassifier,
    cfg: &PreprocessConfig,
    mut on_progress: impl FnMut(usize, usize),
) -> Result<LabelledDataset, ClassifyError> {
    let units: Vec<Vec<SentenceUnit>> = commits.iter().map(|c| preprocess(&c.message, cfg)).collect();
    let flat: Vec<SentenceUnit> = units.iter().flatten().cloned().collect();
    let total = flat.len();
    on_progress(0, total);

    let mut labelled = Vec::with_capacity(total);
    for chunk in flat.chunks(CHUNK) {
        labelled.extend(classify_batch(chunk.to_vec(), classifier)?);
        on_progress(labelled.len(), total);
    }

    let mut rest = labelled.into_iter();
    let commits = commits
        .into_iter()
        .zip(&units)
        .map(|(commit, u)| CommitLabelled {
            commit,
            sentences: rest.by_ref().take(u.len()).collect(),
        })
        .collect();
    Ok(LabelledDataset {
        api_url,
        fetched_at,
        commits,
    })
}

#[derive(Clone)]
pub struct ModulePipeline {
    pub fetcher: Fetcher,
    pub classifier: Arc<dyn SentenceClassifier>,
    pub preprocess: PreprocessConfig,
    pub report: ReportOptions,
    /// Recorded as the fetch time instead of the clock reading, for
    /// reproducible output.
    pub timestamp: Option<DateTime<Utc>>,
}

impl ModulePipeline {
    pub fn new(fetcher: Fetcher, classifier: Arc<dyn SentenceClassifier>) -> Self {
        let report = ReportOptions {
            classifier: classifier.kind().to_string(),
            ..ReportOptions::default()
        };
        Self {
            fetcher,
            classifier,
            preprocess: PreprocessConfig::default(),
            report,
            timestamp: None,
        }
    }

    /// Runs the whole analysis. Classification runs on the blocking pool since
    /// adapter classifiers do synchronous process I/O.
    pub async fn run(
        &self,
        module: &ModuleRef,
        progress: ProgressSink,
    ) -> Result<(LabelledDataset, AnalysisReport), PipelineError> {
        let sink = progress.clone();
        let fetched = self
            .fetcher
            .fetch_commits_with_progress(module, move |n| sink(Progress::Fetching { fetched_commits: n }))
            .await?;

        let classifier = self.classifier.clone();
        let cfg = self.preprocess.clone();
        let api_url = module.api_url().to_string();
        let fetched_at = self.timestamp.unwrap_or(fetched.fetched_at);
        let sink = progress.clone();
        let dataset = tokio::task::spawn_blocking(move || {
            label_commits(
                fetched.commits,
                Some(api_url),
                Some(fetched_at),
                classifier.as_ref(),
                &cfg,
                |done, total| {
                    sink(Progress::Classifying {
                        classified_sentences: done,
                        total_sentences: total,
                    })
                },
            )
        })
        .await
        .map_err(|e| PipelineError::Join(e.to_string()))??;

        progress(Progress::Analyzing);
        let report = build_report(&dataset, &self.report)?;
        Ok((dataset, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Lexicon;
    use chrono::TimeZone;

    fn commit(i: usize, message: &str) -> Commit {
        Commit {
            sha: format!("{i:040x}"),
            author_id: "a@x".into(),
            author_name: "A".into(),
            committed_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
            message: message.into(),
        }
    }

    #[test]
    fn sentences_return_to_their_commits() {
        let commits = vec![
            commit(1, "Fix alpha. Fix beta."),
            commit(2, "Signed-off-by: nobody <n@x>"),
            commit(3, "Drop gamma.\n\nOtherwise delta breaks."),
        ];
        let mut calls = Vec::new();
        let d = label_commits(commits, None, None, &Lexicon::builtin(), &PreprocessConfig::default(), |a, b| {
            calls.push((a, b))
        })
        .unwrap();
        let sizes: Vec<_> = d.commits.iter().map(|c| c.sentences.len()).collect();
        assert_eq!(sizes, [2, 0, 2]);
        assert_eq!(d.commits[2].sentences[1].unit.text, "Otherwise delta breaks.");
        assert!(d.commits[2].sentences[1].verdict.rationale);
        assert_eq!(calls.first(), Some(&(0, 4)));
        assert_eq!(calls.last(), Some(&(4, 4)));
    }
}
