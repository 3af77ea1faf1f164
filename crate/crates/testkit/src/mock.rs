//! In-process mock of `GET /repos/{owner}/{repo}/commits`.
//!
//! Tracks an hourly budget like GitHub does: every request spends one unit,
//! headers report the remainder, and a request arriving with nothing left gets
//! a 403 until the reset instant. The server reads time through [`NowFn`] so a
//! test can share a manual clock with the client under test.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::{DateTime, Duration, Utc};
use serde_json::Value;
use tokio::sync::oneshot;

pub type NowFn = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Clone)]
pub struct MockConfig {
    pub pages: Vec<Vec<Value>>,
    /// Budget restored at each reset.
    pub rate_limit: u64,
    pub initial_remaining: u64,
    /// Time from budget exhaustion to reset.
    pub reset_in: Duration,
    pub now: NowFn,
    /// Statuses served, in order, to the first requests before normal service.
    pub fail_first: Vec<u16>,
    /// Serve this status to every request.
    pub fixed_status: Option<u16>,
    /// Serve this body instead of page 1.
    pub page_one_body: Option<String>,
    pub link_headers: bool,
}

impl MockConfig {
    pub fn new(pages: Vec<Vec<Value>>) -> Self {
        Self {
            pages,
            rate_limit: 5000,
            initial_remaining: 5000,
            reset_in: Duration::seconds(3600),
            now: Arc::new(Utc::now),
            fail_first: Vec::new(),
            fixed_status: None,
            page_one_body: None,
            link_headers: false,
        }
    }

    pub fn with_clock(mut self, now: NowFn) -> Self {
        self.now = now;
        self
    }

    pub fn with_remaining(mut self, remaining: u64, reset_in: Duration) -> Self {
        self.initial_remaining = remaining;
        self.reset_in = reset_in;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RequestRecord {
    pub path: String,
    pub page: Option<u32>,
    pub per_page: Option<u32>,
    pub authorization: Option<String>,
    pub at: DateTime<Utc>,
    pub status: u16,
    /// The request arrived while the budget was exhausted.
    pub premature: bool,
    /// Reset instant advertised in the response headers.
    pub reset_at: DateTime<Utc>,
    pub remaining_after: u64,
}

struct Budget {
    remaining: u64,
    reset_at: Option<DateTime<Utc>>,
    served: usize,
}

struct Shared {
    cfg: MockConfig,
    budget: Mutex<Budget>,
    log: Mutex<Vec<RequestRecord>>,
}

pub struct MockGitHub {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockGitHub {
    /// Binds an ephemeral loopback port and serves on the current runtime.
    pub async fn start(cfg: MockConfig) -> Self {
        let shared = Arc::new(Shared {
            budget: Mutex::new(Budget {
                remaining: cfg.initial_remaining,
                reset_at: None,
                served: 0,
            }),
            cfg,
            log: Mutex::new(Vec::new()),
        });
        let app = Router::new()
            .route("/repos/{owner}/{repo}/commits", get(commits))
            .with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
                .ok();
        });
        Self {
            addr,
            shared,
            shutdown: Some(tx),
        }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Commits-by-path URL for this server.
    pub fn commits_url(&self, path: &str) -> String {
        format!("http://{}/repos/torvalds/linux/commits?path={path}", self.addr)
    }

    pub fn requests(&self) -> Vec<RequestRecord> {
        self.shared.log.lock().unwrap().clone()
    }

    pub fn total_commits(&self) -> usize {
        self.shared.cfg.pages.iter().map(Vec::len).sum()
    }
}

impl Drop for MockGitHub {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

fn ceil_to_second(t: DateTime<Utc>) -> DateTime<Utc> {
    let secs = t.timestamp() + i64::from(t.timestamp_subsec_nanos() > 0);
    DateTime::from_timestamp(secs, 0).unwrap()
}

async fn commits(
    State(shared): State<Arc<Shared>>,
    Path((_owner, _repo)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Response {
    let cfg = &shared.cfg;
    let now = (cfg.now)();
    let page: Option<u32> = query.get("page").and_then(|p| p.parse().ok());
    let per_page: Option<u32> = query.get("per_page").and_then(|p| p.parse().ok());

    let (premature, remaining, reset_at, served) = {
        let mut b = shared.budget.lock().unwrap();
        if b.reset_at.is_some_and(|r| now >= r) {
            b.remaining = cfg.rate_limit;
            b.reset_at = None;
        }
        let premature = b.remaining == 0;
        if premature && b.reset_at.is_none() {
            b.reset_at = Some(ceil_to_second(now + cfg.reset_in));
        }
        if !premature {
            b.remaining -= 1;
            if b.remaining == 0 {
                b.reset_at = Some(ceil_to_second(now + cfg.reset_in));
            }
        }
        let reset_at = b.reset_at.unwrap_or_else(|| ceil_to_second(now + cfg.reset_in));
        b.served += 1;
        (premature, b.remaining, reset_at, b.served)
    };

    let (status, body) = if premature {
        (
            StatusCode::FORBIDDEN,
            r#"{"message":"API rate limit exceeded"}"#.to_string(),
        )
    } else if let Some(code) = cfg.fixed_status {
        (status_code(code), format!(r#"{{"message":"status {code}"}}"#))
    } else if let Some(&code) = cfg.fail_first.get(served - 1) {
        (status_code(code), format!(r#"{{"message":"status {code}"}}"#))
    } else {
        let idx = page.unwrap_or(1).max(1) as usize - 1;
        match (&cfg.page_one_body, idx) {
            (Some(raw), 0) => (StatusCode::OK, raw.clone()),
            _ => {
                let items = cfg.pages.get(idx).cloned().unwrap_or_default();
                (StatusCode::OK, Value::Array(items).to_string())
            }
        }
    };

    shared.log.lock().unwrap().push(RequestRecord {
        path: format!("/repos/{_owner}/{_repo}/commits"),
        page,
        per_page,
        authorization: headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string),
        at: now,
        status: status.as_u16(),
        premature,
        reset_at,
        remaining_after: remaining,
    });

    let mut resp = (status, body).into_response();
    let h = resp.headers_mut();
    h.insert("content-type", HeaderValue::from_static("application/json"));
    h.insert("x-ratelimit-limit", HeaderValue::from(cfg.rate_limit));
    h.insert("x-ratelimit-remaining", HeaderValue::from(remaining));
    h.insert("x-ratelimit-reset", HeaderValue::from(reset_at.timestamp()));
    if cfg.link_headers && status == StatusCode::OK {
        let idx = page.unwrap_or(1).max(1) as usize;
        let rel = if idx < cfg.pages.len() {
            format!(r#"<?page={}>; rel="next", <?page={}>; rel="last""#, idx + 1, cfg.pages.len())
        } else {
            r#"<?page=1>; rel="first""#.to_string()
        };
        h.insert("link", HeaderValue::from_str(&rel).unwrap());
    }
    resp
}

fn status_code(code: u16) -> StatusCode {
    StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
}
