use std::io::Read;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use comrat_core::commit_analyzer::{analyze_commit_message, CommitReport, Verdict, DEFAULT_THRESHOLD};

use crate::{classifier_failure, ClassifierArgs, Failure, EXIT_USAGE, EXIT_WARNING};

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    /// The JSON report document.
    Doc,
}

#[derive(Args)]
pub struct CommitArgs {
    /// Read the message from this file instead of standard input.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
    /// Rationale density below which the verdict is a warning.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = parse_threshold)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Exit 2 when the message has no analyzable sentences.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if (0.0..=1.0).contains(&t) => Ok(t),
        _ => Err(format!("threshold must be a number between 0 and 1, got `{s}`")),
    }
}

fn flag(b: bool) -> char {
    if b {
        '+'
    } else {
        '-'
    }
}

fn render(r: &CommitReport) -> String {
    let mut out = String::new();
    for s in &r.sentences {
        out.push_str(&format!(
            "[{}] D{} R{}  {}\n",
            s.unit.index + 1,
            flag(s.verdict.decision),
            flag(s.verdict.rationale),
            s.unit.text
        ));
    }
    let fmt = |d: Option<f64>| d.map_or("n/a".to_string(), |v| format!("{v:.2}"));
    out.push_str(&format!("Number of sentences: {}\n", r.number_of_sentences));
    out.push_str(&format!("Rationale density: {}\n", fmt(r.rationale_density)));
    out.push_str(&format!("Decision density: {}\n", fmt(r.decision_density)));
    let note = match r.verdict {
        Verdict::Success => format!("rationale density at or above {:.2}", r.threshold),
        Verdict::Warning => format!("rationale density below {:.2}; consider explaining why", r.threshold),
        Verdict::Empty => "no sentences to analyze".to_string(),
    };
    out.push_str(&format!("Verdict: {} ({note})\n", r.verdict.as_str()));
    out
}

pub fn run(args: CommitArgs) -> Result<u8, Failure> {
    let raw = match &args.file {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{e:#}")))?,
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read standard input: {e}")))?;
            s
        }
    };
    let (classifier, pre) = args.classifier.load()?;
    let report = analyze_commit_message(&raw, classifier.as_ref(), &pre, args.threshold).map_err(classifier_failure)?;

    match args.format {
        Format::Text => print!("{}", render(&report)),
        Format::Doc => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    Ok(match report.verdict {
        Verdict::Success => 0,
        Verdict::Warning => EXIT_WARNING,
        Verdict::Empty if args.strict => {
            eprintln!("comrat: message has no analyzable sentences");
            EXIT_USAGE
        }
        Verdict::Empty => 0,
    })
}
