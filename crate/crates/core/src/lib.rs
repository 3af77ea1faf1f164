//! Commit-message rationale analysis.
//!
//! The engine fetches the commit history of a module (a path inside a GitHub
//! repository), splits every message into sentences, labels each sentence as
//! Decision and/or Rationale, and derives presence metrics plus the factor,
//! evolution, structure and word-frequency analyses. Datasets export to CSV,
//! reports to a versioned JSON document and a set of SVG figures.
//!
//! A single message can also be scored on its own with
//! [`commit_analyzer::analyze_commit_message`].

pub mod analyses;
pub mod classify;
pub mod clock;
pub mod commit_analyzer;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod report;

pub use classify::{ClassifierSpec, LabelVerdict, LabelledSentence, SentenceClassifier};
pub use ingest::{Commit, ModuleRef};
pub use metrics::{CommitLabelled, LabelledDataset};
pub use preprocess::SentenceUnit;
