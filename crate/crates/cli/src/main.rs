//! `comrat`: analyze commit-message rationale from the command line.

mod commit;
mod module;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comrat_core::classify::{build_classifier, ClassifierSpec, ClassifyError};
use comrat_core::ingest::RateLimitPolicy;
use comrat_core::preprocess::PreprocessConfig;
use comrat_core::SentenceClassifier;
use std::sync::Arc;

pub const EXIT_WARNING: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INGEST: u8 = 3;
pub const EXIT_CLASSIFIER: u8 = 4;

#[derive(Parser)]
#[command(name = "comrat", version, about = "Commit message rationale analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze every commit touching one module (a GitHub commits-by-path URL).
    Module(module::ModuleArgs),
    /// Analyze a single commit message from a file or standard input.
    Commit(commit::CommitArgs),
    /// Run the HTTP service.
    Serve(serve::ServeArgs),
}

/// Options shared by every subcommand that classifies sentences.
#[derive(Args, Clone)]
pub struct ClassifierArgs {
    /// `lexicon`, `lexicon:<file>` or `adapter:<command>`.
    #[arg(long, default_value = "lexicon", value_parser = parse_spec)]
    pub classifier: ClassifierSpec,
    /// Preprocessing rules file (trailer keys, code prefixes, indent).
    #[arg(long, value_name = "FILE")]
    pub preprocess: Option<PathBuf>,
}

fn parse_spec(s: &str) -> Result<ClassifierSpec, String> {
    s.parse()
}

pub fn parse_policy(s: &str) -> Result<RateLimitPolicy, String> {
    s.parse().map_err(|e: String| e)
}

/// A failure with the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::new(1, format!("{e:#}"))
    }
}

impl ClassifierArgs {
    /// Builds the classifier and preprocessing rules. Adapter commands are
    /// checked up front so a missing program fails before any work starts.
    pub fn load(&self) -> Result<(Arc<dyn SentenceClassifier>, PreprocessConfig), Failure> {
        let classifier = build_classifier(&self.classifier).map_err(classifier_failure)?;
        if let ClassifierSpec::Adapter { command } = &self.classifier {
            comrat_core::classify::AdapterClassifier::new(command)
                .and_then(|a| a.preflight())
                .map_err(classifier_failure)?;
        }
        let pre = match &self.preprocess {
            Some(path) => PreprocessConfig::load(path)
                .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?,
            None => PreprocessConfig::default(),
        };
        Ok((classifier, pre))
    }
}

pub fn classifier_failure(e: ClassifyError) -> Failure {
    Failure::new(EXIT_CLASSIFIER, format!("classifier error: {e}"))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("COMRAT_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Module(args) => module::run(args),
        Command::Commit(args) => commit::run(args),
        Command::Serve(args) => serve::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("comrat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
