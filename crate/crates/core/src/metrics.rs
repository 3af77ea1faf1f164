//! Rationale presence metrics over a labelled dataset.
//!
//! Ratios are kept exact ([`Density`], [`BigRational`]); rounding happens only
//! when formatting for display.

use chrono::{DateTime, Utc};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::classify::LabelledSentence;
use crate::ingest::Commit;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitLabelled {
    pub commit: Commit,
    pub sentences: Vec<LabelledSentence>,
}

/// All labelled commits of a module, in fetch order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelledDataset {
    pub api_url: Option<String>,
    pub fetched_at: Option<DateTime<Utc>>,
    pub commits: Vec<CommitLabelled>,
}

impl LabelledDataset {
    pub fn n_sentences(&self) -> usize {
        self.commits.iter().map(|c| c.sentences.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("commit {0} has no sentences")]
pub struct ZeroSentences(pub usize);

/// `hits / total` for one commit, `total >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Density {
    pub hits: usize,
    pub total: usize,
}

impl Density {
    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.hits), BigInt::from(self.total))
    }

    pub fn as_f64(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    pub fn is_positive(&self) -> bool {
        self.hits > 0
    }
}

fn density_by(c: &CommitLabelled, label: impl Fn(&LabelledSentence) -> bool) -> Result<Density, ZeroSentences> {
    if c.sentences.is_empty() {
        return Err(ZeroSentences(0));
    }
    Ok(Density {
        hits: c.sentences.iter().filter(|s| label(s)).count(),
        total: c.sentences.len(),
    })
}

/// Share of the commit's sentences labelled Rationale (multi-labelled included).
pub fn rationale_density(c: &CommitLabelled) -> Result<Density, ZeroSentences> {
    density_by(c, |s| s.verdict.rationale)
}

/// Share of the commit's sentences labelled Decision.
pub fn decision_density(c: &CommitLabelled) -> Result<Density, ZeroSentences> {
    density_by(c, |s| s.verdict.decision)
}

/// Exact arithmetic mean; `None` for an empty input.
pub fn mean_density<'a>(values: impl IntoIterator<Item = &'a Density>) -> Option<BigRational> {
    let mut sum = BigRational::zero();
    let mut n = 0u64;
    for d in values {
        sum += d.as_ratio();
        n += 1;
    }
    (n > 0).then(|| sum / BigRational::from_integer(BigInt::from(n)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceMetrics {
    pub n_commits: usize,
    pub n_commits_with_rationale: usize,
    /// In [0, 100]; `None` for an empty dataset.
    pub rationale_percentage: Option<BigRational>,
    /// Mean density over rationale-bearing commits; `None` if there are none.
    pub average_rationale_density: Option<BigRational>,
}

pub fn rationale_percentage(with_rationale: usize, total: usize) -> Option<BigRational> {
    (total > 0).then(|| {
        BigRational::new(
            BigInt::from(with_rationale) * BigInt::from(100),
            BigInt::from(total),
        )
    })
}

pub fn presence_metrics(d: &LabelledDataset) -> PresenceMetrics {
    let with_rationale: Vec<Density> = d
        .commits
        .iter()
        .filter_map(|c| rationale_density(c).ok())
        .filter(Density::is_positive)
        .collect();
    PresenceMetrics {
        n_commits: d.commits.len(),
        n_commits_with_rationale: with_rationale.len(),
        rationale_percentage: rationale_percentage(with_rationale.len(), d.commits.len()),
        average_rationale_density: mean_density(&with_rationale),
    }
}

/// Sentence counts by label combination. The four buckets partition `total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub decision_only: usize,
    pub rationale_only: usize,
    pub both: usize,
    pub neither: usize,
    pub total: usize,
}

pub fn label_distribution(d: &LabelledDataset) -> LabelDistribution {
    let mut dist = LabelDistribution::default();
    for s in d.commits.iter().flat_map(|c| &c.sentences) {
        match (s.verdict.decision, s.verdict.rationale) {
            (true, false) => dist.decision_only += 1,
            (false, true) => dist.rationale_only += 1,
            (true, true) => dist.both += 1,
            (false, false) => dist.neither += 1,
        }
        dist.total += 1;
    }
    dist
}

/// Fixed-point rendering of a non-negative ratio, rounding half up.
pub fn format_fixed(value: &BigRational, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let scaled = value * BigRational::from_integer(scale.clone());
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let rounded = (scaled + half).floor().to_integer();
    let (int, frac) = rounded.div_rem(&scale);
    if decimals == 0 {
        return int.to_string();
    }
    format!("{int}.{:0>width$}", frac.to_string(), width = decimals as usize)
}

/// `"84.93%"` style.
pub fn format_percentage(value: &BigRational) -> String {
    format!("{}%", format_fixed(value, 2))
}

/// `"num/den"` in lowest terms.
pub fn exact_string(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn ratio_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
