//! Factor, evolution, structure and word-frequency analyses.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::metrics::{decision_density, mean_density, ratio_to_f64, rationale_density, Density, LabelledDataset};

pub const DEFAULT_BINS: usize = 10;
pub const BUILTIN_STOPWORDS: &str = include_str!("../lexicon/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPoint {
    pub commit_sha: String,
    pub size: usize,
    pub rationale_density: f64,
}

/// Rationale density against message size, one point per non-empty commit.
pub fn factor_size_series(d: &LabelledDataset) -> Vec<FactorPoint> {
    d.commits
        .iter()
        .filter_map(|c| {
            let density = rationale_density(c).ok()?;
            Some(FactorPoint {
                commit_sha: c.commit.sha.clone(),
                size: density.total,
                rationale_density: density.as_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorStat {
    pub author_id: String,
    pub n_commits: usize,
    pub avg_rationale_density: Option<f64>,
}

/// Per-author commit count and mean rationale density, most active first.
pub fn author_series(d: &LabelledDataset) -> Vec<AuthorStat> {
    let mut by_author: HashMap<&str, (usize, Vec<Density>)> = HashMap::new();
    for c in &d.commits {
        let entry = by_author.entry(c.commit.author_id.as_str()).or_default();
        entry.0 += 1;
        if let Ok(density) = rationale_density(c) {
            entry.1.push(density);
        }
    }
    let mut stats: Vec<AuthorStat> = by_author
        .into_iter()
        .map(|(author, (n, densities))| AuthorStat {
            author_id: author.to_string(),
            n_commits: n,
            avg_rationale_density: mean_density(&densities).map(|m| ratio_to_f64(&m)),
        })
        .collect();
    stats.sort_by(|a, b| b.n_commits.cmp(&a.n_commits).then_with(|| a.author_id.cmp(&b.author_id)));
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearPoint {
    pub year: i32,
    pub avg_rationale_density: f64,
    pub avg_decision_density: f64,
    pub n_commits: usize,
}

/// Yearly (UTC) mean rationale and decision densities. Both means run over
/// every commit of the year that has at least one sentence.
pub fn evolution_series(d: &LabelledDataset) -> Vec<YearPoint> {
    let mut years: BTreeMap<i32, (Vec<Density>, Vec<Density>)> = BTreeMap::new();
    for c in &d.commits {
        let (Ok(r), Ok(dd)) = (rationale_density(c), decision_density(c)) else {
            continue;
        };
        let entry = years.entry(c.commit.committed_at.year()).or_default();
        entry.0.push(r);
        entry.1.push(dd);
    }
    years
        .into_iter()
        .map(|(year, (r, dd))| YearPoint {
            year,
            avg_rationale_density: ratio_to_f64(&mean_density(&r).expect("non-empty year")),
            avg_decision_density: ratio_to_f64(&mean_density(&dd).expect("non-empty year")),
            n_commits: r.len(),
        })
        .collect()
}

/// Category counts over normalized sentence position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureHistogram {
    pub n_bins: usize,
    pub decision: Vec<usize>,
    pub rationale: Vec<usize>,
    pub none: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("histogram needs at least one bin")]
pub struct InvalidBins;

/// Bin of position `(index + 0.5) / total` among `n_bins` equal bins.
pub fn position_bin(index: usize, total: usize, n_bins: usize) -> usize {
    ((2 * index + 1) * n_bins / (2 * total)).min(n_bins - 1)
}

pub fn structure_histogram(d: &LabelledDataset, n_bins: usize) -> Result<StructureHistogram, InvalidBins> {
    if n_bins == 0 {
        return Err(InvalidBins);
    }
    let mut h = StructureHistogram {
        n_bins,
        decision: vec![0; n_bins],
        rationale: vec![0; n_bins],
        none: vec![0; n_bins],
    };
    for c in &d.commits {
        let total = c.sentences.len();
        for s in &c.sentences {
            let bin = position_bin(s.unit.index, total, n_bins);
            if s.verdict.decision {
                h.decision[bin] += 1;
            }
            if s.verdict.rationale {
                h.rationale[bin] += 1;
            }
            if !s.verdict.decision && !s.verdict.rationale {
                h.none[bin] += 1;
            }
        }
    }
    Ok(h)
}

/// Stop words for the frequency tables; the built-in list can be extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl Default for StopWords {
    fn default() -> Self {
        Self::builtin()
    }
}

impl StopWords {
    pub fn builtin() -> Self {
        let mut s = Self::empty();
        s.extend_from_text(BUILTIN_STOPWORDS);
        s
    }

    pub fn empty() -> Self {
        Self(HashSet::new())
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Self(words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect())
    }

    /// Adds one word per line; `#` starts a comment.
    pub fn extend_from_text(&mut self, text: &str) {
        for line in text.lines() {
            let word = line.split('#').next().unwrap_or("").trim();
            if !word.is_empty() {
                self.0.insert(word.to_lowercase());
            }
        }
    }

    pub fn extend_from_file(&mut self, path: &Path) -> std::io::Result<()> {
        self.extend_from_text(&std::fs::read_to_string(path)?);
        Ok(())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordCategory {
    DecisionOnly,
    RationaleOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFrequencyTable {
    pub category: WordCategory,
    /// Sorted by count descending, then word ascending.
    pub entries: Vec<WordCount>,
}

impl WordFrequencyTable {
    pub fn top(&self, n: usize) -> &[WordCount] {
        &self.entries[..n.min(self.entries.len())]
    }
}

/// Lowercase, split on non-alphanumerics, drop short, numeric and stop words.
pub fn frequency_tokens<'a>(text: &'a str, stopwords: &'a StopWords) -> impl Iterator<Item = String> + 'a {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
}

/// Frequency tables for decision-only and rationale-only sentences.
/// Sentences bearing both labels are excluded from both tables.
pub fn word_frequencies(d: &LabelledDataset, stopwords: &StopWords) -> (WordFrequencyTable, WordFrequencyTable) {
    let mut decision: HashMap<String, usize> = HashMap::new();
    let mut rationale: HashMap<String, usize> = HashMap::new();
    for s in d.commits.iter().flat_map(|c| &c.sentences) {
        let target = match (s.verdict.decision, s.verdict.rationale) {
            (true, false) => &mut decision,
            (false, true) => &mut rationale,
            _ => continue,
        };
        for token in frequency_tokens(&s.unit.text, stopwords) {
            *target.entry(token).or_default() += 1;
        }
    }
    (
        into_table(WordCategory::DecisionOnly, decision),
        into_table(WordCategory::RationaleOnly, rationale),
    )
}

fn into_table(category: WordCategory, counts: HashMap<String, usize>) -> WordFrequencyTable {
    let mut entries: Vec<WordCount> = counts
        .into_iter()
        .map(|(word, count)| WordCount { word, count })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    WordFrequencyTable { category, entries }
}
