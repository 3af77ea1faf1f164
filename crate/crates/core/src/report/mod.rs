//! Exported artifacts: dataset CSV, the JSON report document, SVG figures and
//! the plain-text summary.

mod csv;
mod figures;

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analyses::{
    author_series, evolution_series, factor_size_series, structure_histogram, word_frequencies,
    AuthorStat, FactorPoint, InvalidBins, StopWords, StructureHistogram, WordCount, YearPoint,
    DEFAULT_BINS,
};
use crate::metrics::{
    exact_string, format_fixed, format_percentage, label_distribution, presence_metrics,
    ratio_to_f64, LabelDistribution, LabelledDataset, PresenceMetrics,
};

pub use self::csv::{export_dataset_csv, import_dataset_csv, write_dataset_csv, CSV_HEADER};
pub use figures::{export_figures, write_figures, Figure, FIGURE_FILES};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");
pub const DEFAULT_TOP_WORDS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("CSV parse error at line {line}: {message}")]
    CsvParse { line: u64, message: String },
    #[error("CSV schema error at line {line}: {reason}")]
    Schema { line: u64, reason: String },
    #[error("report document error: {0}")]
    Document(#[from] serde_json::Error),
    #[error(transparent)]
    InvalidBins(#[from] InvalidBins),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<::csv::Error> for ReportError {
    fn from(e: ::csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            ::csv::ErrorKind::Io(io) => Self::Io(io),
            kind => Self::CsvParse {
                line,
                message: format!("{kind:?}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub api_url: Option<String>,
    pub fetched_at: Option<DateTime<Utc>>,
    pub classifier: String,
    pub n_commits: usize,
    pub n_sentences: usize,
}

/// Presence metrics as serialized: floats for consumers, exact `num/den`
/// strings for recomputation checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresenceBlock {
    pub n_commits: usize,
    pub n_commits_with_rationale: usize,
    pub rationale_percentage: Option<f64>,
    pub rationale_percentage_exact: Option<String>,
    pub average_rationale_density: Option<f64>,
    pub average_rationale_density_exact: Option<String>,
}

impl From<&PresenceMetrics> for PresenceBlock {
    fn from(m: &PresenceMetrics) -> Self {
        Self {
            n_commits: m.n_commits,
            n_commits_with_rationale: m.n_commits_with_rationale,
            rationale_percentage: m.rationale_percentage.as_ref().map(ratio_to_f64),
            rationale_percentage_exact: m.rationale_percentage.as_ref().map(exact_string),
            average_rationale_density: m.average_rationale_density.as_ref().map(ratio_to_f64),
            average_rationale_density_exact: m.average_rationale_density.as_ref().map(exact_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorsBlock {
    pub size_series: Vec<FactorPoint>,
    pub author_series: Vec<AuthorStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFrequencyBlock {
    pub decision_only: Vec<WordCount>,
    pub rationale_only: Vec<WordCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub distribution: LabelDistribution,
    pub presence: PresenceBlock,
    pub factors: FactorsBlock,
    pub evolution: Vec<YearPoint>,
    pub structure: StructureHistogram,
    pub word_frequencies: WordFrequencyBlock,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub classifier: String,
    pub n_bins: usize,
    pub stopwords: StopWords,
    pub top_words: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            classifier: "builtin-lexicon".into(),
            n_bins: DEFAULT_BINS,
            stopwords: StopWords::builtin(),
            top_words: DEFAULT_TOP_WORDS,
        }
    }
}

pub fn build_report(d: &LabelledDataset, opts: &ReportOptions) -> Result<AnalysisReport, ReportError> {
    let distribution = label_distribution(d);
    let presence = presence_metrics(d);
    let (decision_words, rationale_words) = word_frequencies(d, &opts.stopwords);
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        metadata: ReportMetadata {
            api_url: d.api_url.clone(),
            fetched_at: d.fetched_at,
            classifier: opts.classifier.clone(),
            n_commits: d.commits.len(),
            n_sentences: distribution.total,
        },
        distribution,
        presence: PresenceBlock::from(&presence),
        factors: FactorsBlock {
            size_series: factor_size_series(d),
            author_series: author_series(d),
        },
        evolution: evolution_series(d),
        structure: structure_histogram(d, opts.n_bins)?,
        word_frequencies: WordFrequencyBlock {
            decision_only: decision_words.top(opts.top_words).to_vec(),
            rationale_only: rationale_words.top(opts.top_words).to_vec(),
        },
    })
}

/// Pretty-printed JSON with a trailing newline. Key order follows the struct
/// definitions, so output is byte-stable for a given report.
pub fn serialize_report(r: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_report(s: &str) -> Result<AnalysisReport, ReportError> {
    Ok(serde_json::from_str(s)?)
}

fn opt_fixed(exact: &Option<String>, decimals: u32, percent: bool) -> String {
    let Some(value) = exact.as_deref().and_then(parse_exact) else {
        return "n/a".into();
    };
    if percent {
        format_percentage(&value)
    } else {
        format_fixed(&value, decimals)
    }
}

fn parse_exact(s: &str) -> Option<num_rational::BigRational> {
    let (n, d) = s.split_once('/')?;
    Some(num_rational::BigRational::new(n.parse().ok()?, d.parse().ok()?))
}

/// Human-readable summary, one block per analysis family.
pub fn render_summary(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let dist = &r.distribution;
    let p = &r.presence;
    let _ = writeln!(out, "Resulting dataset:");
    let _ = writeln!(out);
    let _ = writeln!(out, "Number of commits: {}", r.metadata.n_commits);
    let _ = writeln!(out, "Number of sentences: {}", r.metadata.n_sentences);
    let _ = writeln!(out);
    let _ = writeln!(out, "Distribution");
    let _ = writeln!(out, "Decision only sentences: {}", dist.decision_only);
    let _ = writeln!(out, "Rationale only sentences: {}", dist.rationale_only);
    let _ = writeln!(out, "Decision & Rationale sentences: {}", dist.both);
    let _ = writeln!(out, "No Decision and No Rationale sentences: {}", dist.neither);
    let _ = writeln!(out);
    let _ = writeln!(out, "Word Frequencies");
    for (label, words) in [
        ("Decision", &r.word_frequencies.decision_only),
        ("Rationale", &r.word_frequencies.rationale_only),
    ] {
        let top: Vec<String> = words.iter().take(10).map(|w| format!("{} ({})", w.word, w.count)).collect();
        let _ = writeln!(out, "{label}: {}", if top.is_empty() { "-".into() } else { top.join(", ") });
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Rationale Presence");
    let _ = writeln!(out, "Total Number of commits: {}", p.n_commits);
    let _ = writeln!(out, "Number of commits that contain rationale: {}", p.n_commits_with_rationale);
    let _ = writeln!(out, "Rationale Percentage: {}", opt_fixed(&p.rationale_percentage_exact, 2, true));
    let _ = writeln!(out, "Average Rationale Density: {}", opt_fixed(&p.average_rationale_density_exact, 2, false));
    let _ = writeln!(out);
    let _ = writeln!(out, "Rationale Factors");
    let _ = writeln!(out, "Commits with sentences: {}", r.factors.size_series.len());
    let _ = writeln!(out, "Authors: {}", r.factors.author_series.len());
    for a in r.factors.author_series.iter().take(5) {
        let avg = a.avg_rationale_density.map_or("n/a".into(), |v| format!("{v:.2}"));
        let _ = writeln!(out, "  {} commits, avg density {}: {}", a.n_commits, avg, a.author_id);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Commit Message Structure");
    let s = &r.structure;
    let row = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "Decision:  {}", row(&s.decision));
    let _ = writeln!(out, "Rationale: {}", row(&s.rationale));
    let _ = writeln!(out, "None:      {}", row(&s.none));
    let _ = writeln!(out);
    let _ = writeln!(out, "Rationale Evolution");
    for y in &r.evolution {
        let _ = writeln!(
            out,
            "{}: rationale {:.2}, decision {:.2} ({} commits)",
            y.year, y.avg_rationale_density, y.avg_decision_density, y.n_commits
        );
    }
    out
}
