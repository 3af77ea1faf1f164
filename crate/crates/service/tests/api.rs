use std::sync::Arc;
use std::time::Duration;

use chrono::{Duration as ChronoDuration, TimeZone, Utc};
use comrat_core::classify::{AdapterClassifier, Lexicon};
use comrat_core::clock::{Clock, ManualClock, SystemClock};
use comrat_core::ingest::RateLimitPolicy;
use comrat_core::report::{build_report, import_dataset_csv, parse_report, REPORT_SCHEMA};
use comrat_service::{serve, App, JobState, ServiceConfig, MAX_MESSAGE_BYTES};
use comrat_testkit::adapters::{write_stub, StubAdapter};
use comrat_testkit::{fixtures, MockConfig, MockGitHub};
use serde_json::{json, Value};

struct Running {
    base: String,
    client: reqwest::Client,
    _stop: tokio::sync::oneshot::Sender<()>,
}

async fn start(cfg: ServiceConfig) -> Running {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    tokio::spawn(serve(listener, App::new(cfg), async {
        let _ = rx.await;
    }));
    Running {
        base,
        client: reqwest::Client::new(),
        _stop: tx,
    }
}

fn lexicon_config() -> ServiceConfig {
    ServiceConfig::new(Arc::new(Lexicon::builtin()))
}

impl Running {
    async fn post(&self, path: &str, body: impl Into<reqwest::Body>) -> reqwest::Response {
        self.client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap()
    }

    async fn get(&self, path: &str) -> reqwest::Response {
        self.client.get(format!("{}{path}", self.base)).send().await.unwrap()
    }

    /// Polls until the job is terminal, returning every observed status.
    async fn poll(&self, id: &str) -> Vec<Value> {
        let mut seen = Vec::new();
        for _ in 0..2000 {
            let s: Value = self.get(&format!("/api/jobs/{id}")).await.json().await.unwrap();
            let state = s["state"].as_str().unwrap().to_string();
            seen.push(s);
            if state == "done" || state == "failed" {
                return seen;
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
        panic!("job {id} did not finish: {:?}", seen.last());
    }
}

fn rank(s: &str) -> usize {
    ["queued", "fetching", "classifying", "analyzing", "done", "failed"]
        .iter()
        .position(|x| *x == s)
        .unwrap()
}

#[tokio::test]
async fn health_is_ok() {
    let s = start(lexicon_config()).await;
    assert_eq!(s.get("/api/health").await.status(), 200);
}

#[tokio::test]
async fn commit_analysis_reports_densities_and_verdict() {
    let s = start(lexicon_config()).await;
    let r = s.post("/api/commit-analysis", json!({"message": "Fix leak. Otherwise boot fails."}).to_string()).await;
    assert_eq!(r.status(), 200);
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["number_of_sentences"], 2);
    assert_eq!(v["rationale_density"], 0.5);
    assert_eq!(v["verdict"], "success");
    assert_eq!(v["sentences"][0]["decision"], true);
    assert_eq!(v["sentences"][1]["rationale"], true);

    let r = s.post("/api/commit-analysis", json!({"message": "Fix leak. Otherwise boot fails.", "threshold": 0.75}).to_string()).await;
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["verdict"], "warning");
}

#[tokio::test]
async fn empty_message_has_empty_verdict() {
    let s = start(lexicon_config()).await;
    let v: Value = s.post("/api/commit-analysis", r#"{"message":""}"#).await.json().await.unwrap();
    assert_eq!(v["verdict"], "empty");
    assert_eq!(v["number_of_sentences"], 0);
    assert!(v["rationale_density"].is_null());
}

#[tokio::test]
async fn bad_commit_requests_are_rejected() {
    let s = start(lexicon_config()).await;
    for body in ["{", "[]", r#"{"msg":"x"}"#, r#"{"message":"x","threshold":2}"#] {
        assert_eq!(s.post("/api/commit-analysis", body).await.status(), 400, "{body}");
    }
    let big = json!({ "message": "a".repeat(MAX_MESSAGE_BYTES + 1) }).to_string();
    assert_eq!(s.post("/api/commit-analysis", big).await.status(), 413);
    let exact = json!({ "message": "a".repeat(MAX_MESSAGE_BYTES) }).to_string();
    assert_eq!(s.post("/api/commit-analysis", exact).await.status(), 200);
}

#[tokio::test]
async fn adapter_failure_is_bad_gateway() {
    let dir = tempfile::tempdir().unwrap();
    let stub = write_stub(dir.path(), StubAdapter::CrashAfter(0));
    let cfg = ServiceConfig::new(Arc::new(AdapterClassifier::new(stub.to_str().unwrap()).unwrap()));
    let s = start(cfg).await;
    let r = s.post("/api/commit-analysis", r#"{"message":"Fix it. Because."}"#).await;
    assert_eq!(r.status(), 502);
    let v: Value = r.json().await.unwrap();
    assert!(v["error"].as_str().unwrap().contains("classifier"));
}

#[tokio::test]
async fn unknown_job_is_404() {
    let s = start(lexicon_config()).await;
    for path in ["/api/jobs/nope", "/api/jobs/nope/report", "/api/jobs/nope/dataset.csv"] {
        assert_eq!(s.get(path).await.status(), 404, "{path}");
    }
}

#[tokio::test]
async fn invalid_module_url_is_400() {
    let s = start(lexicon_config()).await;
    let r = s.post("/api/module-analysis", r#"{"module_url":"ftp://x/repos/a/b/commits"}"#).await;
    assert_eq!(r.status(), 400);
    assert_eq!(s.post("/api/module-analysis", "{}").await.status(), 400);
}

#[tokio::test]
async fn module_job_runs_to_done_and_serves_consistent_artifacts() {
    let mock = MockGitHub::start(MockConfig::new(fixtures::three_page_history())).await;
    let s = start(lexicon_config()).await;
    let r = s
        .post("/api/module-analysis", json!({"module_url": mock.commits_url("mm/slob.c"), "token": "ghp_abc"}).to_string())
        .await;
    assert_eq!(r.status(), 202);
    let id = r.json::<Value>().await.unwrap()["job_id"].as_str().unwrap().to_string();
    let seen = s.poll(&id).await;

    // Forward-only states, monotone progress.
    for w in seen.windows(2) {
        assert!(rank(w[0]["state"].as_str().unwrap()) <= rank(w[1]["state"].as_str().unwrap()));
        for key in ["fetched_commits", "classified_sentences"] {
            assert!(w[0]["progress"][key].as_u64() <= w[1]["progress"][key].as_u64(), "{key}");
        }
    }
    let last = seen.last().unwrap();
    assert_eq!(last["state"], "done", "{last}");
    assert_eq!(last["progress"]["fetched_commits"], 217);
    assert!(!last.to_string().contains("ghp_abc"));

    let report_text = s.get(&format!("/api/jobs/{id}/report")).await.text().await.unwrap();
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    assert!(jsonschema::is_valid(&schema, &serde_json::from_str(&report_text).unwrap()));
    let report = parse_report(&report_text).unwrap();
    assert_eq!(report.metadata.n_commits, 217);

    let csv = s.get(&format!("/api/jobs/{id}/dataset.csv")).await;
    assert!(csv.headers()["content-type"].to_str().unwrap().starts_with("text/csv"));
    let bytes = csv.bytes().await.unwrap();
    let mut rebuilt = import_dataset_csv(&bytes).unwrap();
    rebuilt.api_url = report.metadata.api_url.clone();
    rebuilt.fetched_at = report.metadata.fetched_at;
    let opts = comrat_core::report::ReportOptions::default();
    assert_eq!(build_report(&rebuilt, &opts).unwrap(), report);
}

#[tokio::test]
async fn artifacts_conflict_until_done() {
    // A wait-policy job stuck behind a 30 s rate-limit reset.
    let cfg = MockConfig::new(fixtures::slob_pages()).with_remaining(0, ChronoDuration::seconds(30));
    let mock = MockGitHub::start(cfg).await;
    let mut scfg = lexicon_config();
    scfg.clock = Arc::new(SystemClock);
    let s = start(scfg).await;
    let r = s.post("/api/module-analysis", json!({"module_url": mock.commits_url("mm/slob.c")}).to_string()).await;
    let id = r.json::<Value>().await.unwrap()["job_id"].as_str().unwrap().to_string();
    for path in ["report", "dataset.csv"] {
        let r = s.get(&format!("/api/jobs/{id}/{path}")).await;
        assert_eq!(r.status(), 409, "{path}");
    }
    let st: Value = s.get(&format!("/api/jobs/{id}")).await.json().await.unwrap();
    assert!(matches!(st["state"].as_str().unwrap(), "queued" | "fetching"));
}

#[tokio::test]
async fn rate_limit_abort_fails_job_without_leaking_token() {
    let clock = Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()));
    let c = clock.clone();
    let cfg = MockConfig::new(fixtures::three_page_history())
        .with_clock(Arc::new(move || c.now()))
        .with_remaining(1, ChronoDuration::seconds(600));
    let mock = MockGitHub::start(cfg).await;
    let mut scfg = lexicon_config();
    scfg.clock = clock.clone();
    scfg.rate_limit = RateLimitPolicy::Abort;
    let s = start(scfg).await;
    let body = json!({"module_url": mock.commits_url("mm/slob.c"), "token": "ghp_leaky"}).to_string();
    let id = s.post("/api/module-analysis", body).await.json::<Value>().await.unwrap()["job_id"]
        .as_str()
        .unwrap()
        .to_string();
    let seen = s.poll(&id).await;
    let last = seen.last().unwrap();
    assert_eq!(last["state"], "failed");
    assert!(last["error"].as_str().unwrap().contains("rate limit"));
    for st in &seen {
        assert!(!st.to_string().contains("ghp_leaky"));
    }
    assert_eq!(s.get(&format!("/api/jobs/{id}/report")).await.status(), 409);
    assert_eq!(
        mock.requests()[0].authorization.as_deref(),
        Some("Bearer ghp_leaky")
    );
}

#[tokio::test]
async fn request_may_choose_rate_limit_policy() {
    let cfg = MockConfig::new(fixtures::three_page_history()).with_remaining(1, ChronoDuration::seconds(600));
    let mock = MockGitHub::start(cfg).await;
    let s = start(lexicon_config()).await;
    let body = json!({"module_url": mock.commits_url("mm/slob.c"), "rate_limit": "abort"}).to_string();
    let id = s.post("/api/module-analysis", body).await.json::<Value>().await.unwrap()["job_id"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!(s.poll(&id).await.last().unwrap()["state"], "failed");
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let mut cfg = lexicon_config();
    cfg.cors_origin = Some("http://localhost:5173".into());
    let s = start(cfg).await;
    let r = s
        .client
        .request(reqwest::Method::OPTIONS, format!("{}/api/commit-analysis", s.base))
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .send()
        .await
        .unwrap();
    assert_eq!(
        r.headers()["access-control-allow-origin"].to_str().unwrap(),
        "http://localhost:5173"
    );
}

#[test]
fn job_state_serializes_lowercase() {
    assert_eq!(serde_json::to_value(JobState::Classifying).unwrap(), "classifying");
}
