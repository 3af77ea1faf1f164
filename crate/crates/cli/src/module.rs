use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use chrono::{DateTime, Utc};
use clap::Args;
use comrat_core::analyses::StopWords;
use comrat_core::clock::SystemClock;
use comrat_core::ingest::{ApiToken, Fetcher, ModuleRef, RateLimitPolicy};
use comrat_core::pipeline::{ModulePipeline, PipelineError, Progress};
use comrat_core::report::{export_dataset_csv, render_summary, serialize_report, write_figures};

use crate::{classifier_failure, parse_policy, ClassifierArgs, Failure, EXIT_INGEST, EXIT_USAGE};

#[derive(Args)]
pub struct ModuleArgs {
    /// Commits-by-path API URL, e.g.
    /// https://api.github.com/repos/torvalds/linux/commits?path=mm/slob.c
    #[arg(long)]
    url: String,
    /// Environment variable holding a GitHub token.
    #[arg(long, value_name = "VAR")]
    token_env: Option<String>,
    /// Reuse fetched commit lists from this directory.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Output directory for dataset.csv, report.json and figures.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// What to do when the API rate limit runs out: wait or abort.
    #[arg(long, default_value = "wait", value_parser = parse_policy)]
    rate_limit: RateLimitPolicy,
    /// Extra stop words for the frequency tables, one or more per line.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Bins for the sentence-position histogram.
    #[arg(long, default_value_t = comrat_core::analyses::DEFAULT_BINS, value_parser = parse_bins)]
    bins: usize,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("bins must be a positive integer, got `{s}`")),
    }
}

/// `SOURCE_DATE_EPOCH`, when set, pins the recorded fetch time so repeated
/// runs produce identical reports.
fn source_date_epoch() -> Result<Option<DateTime<Utc>>, Failure> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .map(Some)
            .ok_or_else(|| Failure::new(EXIT_USAGE, format!("invalid SOURCE_DATE_EPOCH `{v}`"))),
        Err(_) => Ok(None),
    }
}

pub fn run(args: ModuleArgs) -> Result<u8, Failure> {
    let token = match &args.token_env {
        Some(var) => match std::env::var(var) {
            Ok(t) if !t.is_empty() => Some(ApiToken::new(t)),
            _ => {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("environment variable {var} is not set"),
                ))
            }
        },
        None => None,
    };
    let module = ModuleRef::new(&args.url)
        .map_err(|e| Failure::new(EXIT_USAGE, e))?
        .with_token(token)
        .with_cache_dir(args.cache.clone());
    let (classifier, pre) = args.classifier.load()?;

    let mut stopwords = StopWords::builtin();
    if let Some(path) = &args.stopwords {
        stopwords
            .extend_from_file(path)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    }

    let fetcher = Fetcher::new(Arc::new(SystemClock)).with_policy(args.rate_limit);
    let mut pipeline = ModulePipeline::new(fetcher, classifier);
    pipeline.preprocess = pre;
    pipeline.report.stopwords = stopwords;
    pipeline.report.n_bins = args.bins;
    pipeline.timestamp = source_date_epoch()?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    let progress = Arc::new(|p: Progress| match p {
        Progress::Classifying {
            classified_sentences: 0,
            total_sentences,
        } => eprintln!("classifying {total_sentences} sentences"),
        Progress::Analyzing => eprintln!("analyzing"),
        _ => {}
    });
    let (dataset, report) = rt
        .block_on(pipeline.run(&module, progress))
        .map_err(|e| match e {
            PipelineError::Ingest(e) => Failure::new(EXIT_INGEST, format!("fetching commits failed: {e}")),
            PipelineError::Classify(e) => classifier_failure(e),
            other => Failure::new(1, other),
        })?;

    let out = &args.out;
    std::fs::write(out.join("dataset.csv"), export_dataset_csv(&dataset)).context("writing dataset.csv")?;
    std::fs::write(out.join("report.json"), serialize_report(&report)).context("writing report.json")?;
    write_figures(&report, out).context("writing figures")?;

    print!("{}", render_summary(&report));
    Ok(0)
}
