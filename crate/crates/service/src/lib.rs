//! HTTP facade over the analysis pipelines.
//!
//! Commit analysis is synchronous. Module analysis runs as a background job
//! that clients poll; results live in memory only.

pub mod jobs;

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use comrat_core::clock::{Clock, SystemClock};
use comrat_core::commit_analyzer::{analyze_commit_message, DEFAULT_THRESHOLD};
use comrat_core::ingest::{ApiToken, Fetcher, ModuleRef, RateLimitPolicy};
use comrat_core::pipeline::{ModulePipeline, PipelineError, ProgressSink};
use comrat_core::preprocess::PreprocessConfig;
use comrat_core::report::{export_dataset_csv, serialize_report, ReportOptions};
use comrat_core::classify::ClassifyError;
use comrat_core::SentenceClassifier;
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use jobs::{JobProgress, JobState, JobStatus};
use jobs::{JobResult, Lookup, Registry};

/// Largest accepted commit message, in bytes.
pub const MAX_MESSAGE_BYTES: usize = 64 * 1024;
pub const DEFAULT_MAX_JOBS: usize = 16;
pub const DEFAULT_WORKERS: usize = 2;
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Clone)]
pub struct ServiceConfig {
    pub classifier: Arc<dyn SentenceClassifier>,
    pub preprocess: PreprocessConfig,
    pub report: ReportOptions,
    pub rate_limit: RateLimitPolicy,
    pub cache_dir: Option<std::path::PathBuf>,
    pub clock: Arc<dyn Clock>,
    pub max_jobs: usize,
    pub workers: usize,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
}

impl ServiceConfig {
    pub fn new(classifier: Arc<dyn SentenceClassifier>) -> Self {
        let report = ReportOptions {
            classifier: classifier.kind().to_string(),
            ..ReportOptions::default()
        };
        Self {
            classifier,
            preprocess: PreprocessConfig::default(),
            report,
            rate_limit: RateLimitPolicy::Wait,
            cache_dir: None,
            clock: Arc::new(SystemClock),
            max_jobs: DEFAULT_MAX_JOBS,
            workers: DEFAULT_WORKERS,
            cors_origin: None,
        }
    }
}

struct AppState {
    cfg: ServiceConfig,
    jobs: Registry,
    workers: Arc<Semaphore>,
}

#[derive(Clone)]
pub struct App(Arc<AppState>);

impl App {
    pub fn new(cfg: ServiceConfig) -> Self {
        Self(Arc::new(AppState {
            jobs: Registry::new(cfg.max_jobs),
            workers: Arc::new(Semaphore::new(cfg.workers.max(1))),
            cfg,
        }))
    }

    pub fn router(&self) -> Router {
        let cors = CorsLayer::new()
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE])
            .allow_origin(match &self.0.cfg.cors_origin {
                Some(o) => match HeaderValue::from_str(o) {
                    Ok(v) => AllowOrigin::exact(v),
                    Err(_) => AllowOrigin::any(),
                },
                None => AllowOrigin::any(),
            });
        Router::new()
            .route("/api/health", get(health))
            .route("/api/commit-analysis", post(commit_analysis))
            .route("/api/module-analysis", post(module_analysis))
            .route("/api/jobs/{id}", get(job_status))
            .route("/api/jobs/{id}/report", get(job_report))
            .route("/api/jobs/{id}/dataset.csv", get(job_dataset))
            // JSON escaping can grow a message; the 64 KiB rule is checked on
            // the decoded text.
            .layer(DefaultBodyLimit::max(8 * MAX_MESSAGE_BYTES))
            .layer(cors)
            .with_state(self.clone())
    }
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    listener: TcpListener,
    app: App,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app.router())
        .with_graceful_shutdown(shutdown)
        .await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitRequest {
    message: String,
    threshold: Option<f64>,
}

async fn commit_analysis(State(app): State<App>, body: Bytes) -> Response {
    let req: CommitRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    if req.message.len() > MAX_MESSAGE_BYTES {
        return error(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("message exceeds {MAX_MESSAGE_BYTES} bytes"),
        );
    }
    let threshold = req.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        return error(StatusCode::BAD_REQUEST, "threshold must be between 0 and 1");
    }
    let classifier = app.0.cfg.classifier.clone();
    let pre = app.0.cfg.preprocess.clone();
    let result = tokio::task::spawn_blocking(move || {
        analyze_commit_message(&req.message, classifier.as_ref(), &pre, threshold)
    })
    .await;
    match result {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e @ ClassifyError::EmptyInput)) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Ok(Err(e)) => {
            tracing::warn!(error = %e, "commit classification failed");
            error(StatusCode::BAD_GATEWAY, format!("classifier failure: {e}"))
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("analysis task failed: {e}")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleRequest {
    module_url: String,
    token: Option<String>,
    rate_limit: Option<RateLimitPolicy>,
}

async fn module_analysis(State(app): State<App>, body: Bytes) -> Response {
    let req: ModuleRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")),
    };
    let module = match ModuleRef::new(&req.module_url) {
        Ok(m) => m
            .with_token(req.token.map(ApiToken::new))
            .with_cache_dir(app.0.cfg.cache_dir.clone()),
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let cfg = &app.0.cfg;
    let id = app.0.jobs.create(module.api_url(), cfg.clock.now());
    let fetcher = Fetcher::new(cfg.clock.clone()).with_policy(req.rate_limit.unwrap_or(cfg.rate_limit));
    let mut pipeline = ModulePipeline::new(fetcher, cfg.classifier.clone());
    pipeline.preprocess = cfg.preprocess.clone();
    pipeline.report = cfg.report.clone();

    tokio::spawn(run_job(app.clone(), id.clone(), module, pipeline));
    (StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response()
}

async fn run_job(app: App, id: String, module: ModuleRef, pipeline: ModulePipeline) {
    let Ok(_permit) = app.0.workers.clone().acquire_owned().await else {
        return;
    };
    let sink: ProgressSink = {
        let app = app.clone();
        let id = id.clone();
        Arc::new(move |p| app.0.jobs.progress(&id, p))
    };
    match pipeline.run(&module, sink).await {
        Ok((dataset, report)) => {
            let report_json = serialize_report(&report);
            let csv = export_dataset_csv(&dataset);
            app.0.jobs.finish(
                &id,
                JobResult {
                    dataset,
                    report,
                    report_json,
                    csv,
                },
            );
        }
        Err(e) => {
            let message = sanitize(&e, module.token());
            tracing::warn!(job = %id, error = %message, "module analysis failed");
            app.0.jobs.fail(&id, message);
        }
    }
}

/// Error text for clients. Partial data is dropped and the token, should any
/// layer have echoed it, is masked.
fn sanitize(e: &PipelineError, token: Option<&ApiToken>) -> String {
    let mut msg = e.to_string();
    if let Some(t) = token {
        if !t.expose().is_empty() {
            msg = msg.replace(t.expose(), "***");
        }
    }
    msg
}

enum ApiError {
    UnknownJob(String),
    NotDone(JobState),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            Self::UnknownJob(id) => error(StatusCode::NOT_FOUND, format!("unknown job `{id}`")),
            Self::NotDone(state) => (
                StatusCode::CONFLICT,
                Json(json!({ "error": format!("job is {}", state.as_str()), "state": state })),
            )
                .into_response(),
        }
    }
}

fn lookup(app: &App, id: &str) -> Result<(JobStatus, Option<Arc<JobResult>>), ApiError> {
    match app.0.jobs.with(id, |j| (j.status.clone(), j.result.clone())) {
        Lookup::Found(v) => Ok(v),
        Lookup::Missing => Err(ApiError::UnknownJob(id.to_string())),
    }
}

async fn job_status(State(app): State<App>, Path(id): Path<String>) -> Response {
    match lookup(&app, &id) {
        Ok((status, _)) => Json(status).into_response(),
        Err(e) => e.into_response(),
    }
}

fn finished(app: &App, id: &str) -> Result<Arc<JobResult>, ApiError> {
    let (status, result) = lookup(app, id)?;
    result.ok_or(ApiError::NotDone(status.state))
}

async fn job_report(State(app): State<App>, Path(id): Path<String>) -> Response {
    match finished(&app, &id) {
        Ok(r) => ([(header::CONTENT_TYPE, "application/json")], r.report_json.clone()).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn job_dataset(State(app): State<App>, Path(id): Path<String>) -> Response {
    match finished(&app, &id) {
        Ok(r) => (
            [
                (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"dataset.csv\""),
            ],
            r.csv.clone(),
        )
            .into_response(),
        Err(e) => e.into_response(),
    }
}
