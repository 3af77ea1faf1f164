//! Labelled dataset CSV, one row per sentence.
//!
//! A commit whose message yields no sentences is written as a single row with
//! `sentence_count` 0 and empty sentence fields, so that it survives a
//! round trip.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use chrono::{DateTime, SecondsFormat, Utc};

use super::ReportError;
use crate::classify::{LabelVerdict, LabelledSentence};
use crate::ingest::Commit;
use crate::metrics::{CommitLabelled, LabelledDataset};
use crate::preprocess::SentenceUnit;

pub const CSV_HEADER: [&str; 8] = [
    "commit_sha",
    "commit_date",
    "author_id",
    "sentence_index",
    "sentence_count",
    "sentence_text",
    "decision",
    "rationale",
];

fn format_date(at: &DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn write_dataset_csv<W: Write>(d: &LabelledDataset, out: W) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &d.commits {
        let date = format_date(&c.commit.committed_at);
        if c.sentences.is_empty() {
            w.write_record([&c.commit.sha, &date, &c.commit.author_id, "", "0", "", "", ""])?;
            continue;
        }
        let count = c.sentences.len().to_string();
        for s in &c.sentences {
            w.write_record([
                c.commit.sha.as_str(),
                &date,
                &c.commit.author_id,
                &s.unit.index.to_string(),
                &count,
                &s.unit.text,
                bool_str(s.verdict.decision),
                bool_str(s.verdict.rationale),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_dataset_csv(d: &LabelledDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset_csv(d, &mut buf).expect("writing to memory");
    buf
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn parse_bool(s: &str, column: &str, line: u64) -> Result<bool, ReportError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ReportError::Schema {
            line,
            reason: format!("{column} must be true or false, got `{other}`"),
        }),
    }
}

/// Inverse of [`export_dataset_csv`]. Columns are located by header name.
/// Commit author names and raw messages are not part of the CSV and come back
/// empty.
pub fn import_dataset_csv(bytes: &[u8]) -> Result<LabelledDataset, ReportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = r.headers()?.clone();
    let mut col = HashMap::new();
    for name in CSV_HEADER {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ReportError::Schema {
                line: 1,
                reason: format!("missing column `{name}`"),
            })?;
        col.insert(name, idx);
    }

    let mut commits: Vec<CommitLabelled> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        // The reader's own line counter lags on CRLF input; count from the byte
        // offset where this record starts.
        let mut start = r.position().byte() as usize;
        while matches!(bytes.get(start), Some(b'\r' | b'\n')) {
            start += 1;
        }
        let line = bytes[..start].iter().filter(|&&b| b == b'\n').count() as u64 + 1;
        if !r.read_record(&mut record)? {
            break;
        }
        let field = |name: &str| record.get(col[name]).unwrap_or("");
        let schema = |reason: String| ReportError::Schema { line, reason };

        let sha = field("commit_sha");
        if !crate::ingest::is_sha(sha) {
            return Err(schema(format!("invalid commit_sha `{sha}`")));
        }
        let date = DateTime::parse_from_rfc3339(field("commit_date"))
            .map_err(|e| schema(format!("invalid commit_date: {e}")))?
            .with_timezone(&Utc);
        let count: usize = field("sentence_count")
            .parse()
            .map_err(|_| schema(format!("invalid sentence_count `{}`", field("sentence_count"))))?;

        let same_commit = commits.last().is_some_and(|c| c.commit.sha == sha);
        if !same_commit {
            if let Some(prev) = commits.last() {
                check_complete(prev, line)?;
            }
            if !seen.insert(sha.to_string()) {
                return Err(schema(format!("rows of commit {sha} are not contiguous")));
            }
            commits.push(CommitLabelled {
                commit: Commit {
                    sha: sha.to_string(),
                    author_id: field("author_id").to_string(),
                    author_name: String::new(),
                    committed_at: date,
                    message: String::new(),
                },
                sentences: Vec::new(),
            });
        }
        let current = commits.last_mut().expect("pushed above");
        if current.commit.committed_at != date || current.commit.author_id != field("author_id") {
            return Err(schema(format!("commit {sha} has inconsistent date or author")));
        }

        if count == 0 {
            if same_commit
                || !field("sentence_index").is_empty()
                || !field("sentence_text").is_empty()
                || !field("decision").is_empty()
                || !field("rationale").is_empty()
            {
                return Err(schema("zero-sentence row must have empty sentence fields".into()));
            }
            continue;
        }
        let index: usize = field("sentence_index")
            .parse()
            .map_err(|_| schema(format!("invalid sentence_index `{}`", field("sentence_index"))))?;
        if index != current.sentences.len() || index >= count {
            return Err(schema(format!(
                "sentence_index {index} out of sequence for commit {sha} ({count} sentences)"
            )));
        }
        if current.sentences.first().is_some_and(|s| s.unit.total != count) {
            return Err(schema(format!("sentence_count changes within commit {sha}")));
        }
        let text = field("sentence_text");
        if text.trim().is_empty() {
            return Err(schema("empty sentence_text".into()));
        }
        current.sentences.push(LabelledSentence {
            unit: SentenceUnit {
                text: text.to_string(),
                index,
                total: count,
            },
            verdict: LabelVerdict {
                decision: parse_bool(field("decision"), "decision", line)?,
                rationale: parse_bool(field("rationale"), "rationale", line)?,
            },
        });
    }
    if let Some(last) = commits.last() {
        check_complete(last, 0)?;
    }
    Ok(LabelledDataset {
        api_url: None,
        fetched_at: None,
        commits,
    })
}

fn check_complete(c: &CommitLabelled, line: u64) -> Result<(), ReportError> {
    let expected = c.sentences.first().map_or(0, |s| s.unit.total);
    if c.sentences.len() != expected {
        return Err(ReportError::Schema {
            line,
            reason: format!(
                "commit {} declares {expected} sentences but has {}",
                c.commit.sha,
                c.sentences.len()
            ),
        });
    }
    Ok(())
}
