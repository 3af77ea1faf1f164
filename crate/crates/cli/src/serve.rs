use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use comrat_core::ingest::RateLimitPolicy;
use comrat_service::{serve, App, ServiceConfig, DEFAULT_ADDR, DEFAULT_MAX_JOBS, DEFAULT_WORKERS};

use crate::{parse_policy, ClassifierArgs, Failure};

#[derive(Args)]
pub struct ServeArgs {
    /// Listen address.
    #[arg(long, env = "COMRAT_ADDR", default_value = DEFAULT_ADDR)]
    addr: String,
    /// Allowed CORS origin; any origin when unset.
    #[arg(long, env = "COMRAT_CORS_ORIGIN")]
    cors_origin: Option<String>,
    /// Cache directory for fetched commit lists.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Default rate-limit policy for module jobs.
    #[arg(long, default_value = "wait", value_parser = parse_policy)]
    rate_limit: RateLimitPolicy,
    /// Concurrent module analyses.
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    workers: usize,
    /// Finished jobs kept in memory.
    #[arg(long, default_value_t = DEFAULT_MAX_JOBS)]
    max_jobs: usize,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    eprintln!("shutting down");
}

pub fn run(args: ServeArgs) -> Result<u8, Failure> {
    let (classifier, pre) = args.classifier.load()?;
    let mut cfg = ServiceConfig::new(classifier);
    cfg.preprocess = pre;
    cfg.cache_dir = args.cache;
    cfg.rate_limit = args.rate_limit;
    cfg.workers = args.workers.max(1);
    cfg.max_jobs = args.max_jobs.max(1);
    cfg.cors_origin = args.cors_origin;

    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .with_context(|| format!("cannot listen on {}", args.addr))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, App::new(cfg), shutdown_signal())
            .await
            .context("server error")?;
        Ok::<_, anyhow::Error>(0)
    })
    .map_err(Failure::from)
}
