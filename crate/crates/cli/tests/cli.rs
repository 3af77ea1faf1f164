use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use chrono::Duration;
use comrat_core::classify::Lexicon;
use comrat_core::report::FIGURE_FILES;
use comrat_service::{serve, App, ServiceConfig};
use comrat_testkit::adapters::{write_stub, StubAdapter};
use comrat_testkit::{fixtures, MockConfig, MockGitHub};

const BIN: &str = env!("CARGO_BIN_EXE_comrat");

fn comrat(args: &[&str]) -> Command {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("SOURCE_DATE_EPOCH").env_remove("COMRAT_ADDR");
    c
}

async fn run(mut cmd: Command) -> Output {
    tokio::task::spawn_blocking(move || cmd.output().unwrap()).await.unwrap()
}

fn commit_with_stdin(args: &[&str], message: &str) -> Output {
    let mut child = comrat(&[&["commit"], args].concat())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(message.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn dir_contains(dir: &Path, needle: &str) -> bool {
    std::fs::read_dir(dir).unwrap().any(|e| {
        let bytes = std::fs::read(e.unwrap().path()).unwrap();
        text(&bytes).contains(needle)
    })
}

#[tokio::test(flavor = "multi_thread")]
async fn module_run_writes_all_artifacts_and_summary() {
    let mock = MockGitHub::start(MockConfig::new(fixtures::slob_pages())).await;
    let out = tempfile::tempdir().unwrap();
    let o = run(comrat(&["module", "--url", &mock.commits_url("mm/slob.c"), "--out", out.path().to_str().unwrap()])).await;
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("Number of commits: 146"), "{stdout}");
    let line = stdout.lines().find(|l| l.starts_with("Rationale Percentage: ")).unwrap();
    let pct = line.trim_start_matches("Rationale Percentage: ");
    assert!(pct.ends_with('%') && pct[..pct.len() - 1].split('.').nth(1).map(str::len) == Some(2), "{line}");
    for f in ["dataset.csv", "report.json"].iter().chain(FIGURE_FILES.iter()) {
        assert!(out.path().join(f).is_file(), "{f}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn module_failures_map_to_exit_codes() {
    let mut cfg = MockConfig::new(fixtures::slob_pages());
    cfg.fixed_status = Some(404);
    let missing = MockGitHub::start(cfg).await;
    let out = tempfile::tempdir().unwrap();
    let o = run(comrat(&["module", "--url", &missing.commits_url("x.c"), "--out", out.path().to_str().unwrap()])).await;
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stderr));

    let ok = MockGitHub::start(MockConfig::new(fixtures::slob_pages())).await;
    let stub = write_stub(out.path(), StubAdapter::CrashAfter(3));
    let spec = format!("adapter:{}", stub.display());
    let o = run(comrat(&["module", "--url", &ok.commits_url("x.c"), "--out", out.path().to_str().unwrap(), "--classifier", &spec])).await;
    assert_eq!(o.status.code(), Some(4), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("classifier"));

    let o = run(comrat(&["module", "--url", "https://example.org/nothing"])).await;
    assert_eq!(o.status.code(), Some(2));
    let o = run(comrat(&["module", "--url", &ok.commits_url("x.c"), "--bins", "0"])).await;
    assert_eq!(o.status.code(), Some(2));
}

#[tokio::test(flavor = "multi_thread")]
async fn abort_on_rate_limit_exits_3_without_leaking_token() {
    let cfg = MockConfig::new(fixtures::three_page_history()).with_remaining(1, Duration::seconds(3600));
    let mock = MockGitHub::start(cfg).await;
    let out = tempfile::tempdir().unwrap();
    let mut cmd = comrat(&[
        "module",
        "--url",
        &mock.commits_url("mm/slob.c"),
        "--token-env",
        "COMRAT_TEST_TOKEN",
        "--rate-limit",
        "abort",
        "--cache",
        out.path().join("cache").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    cmd.env("COMRAT_TEST_TOKEN", "ghp_topsecret").env("COMRAT_LOG", "debug");
    let o = run(cmd).await;
    assert_eq!(o.status.code(), Some(3));
    let stderr = text(&o.stderr);
    assert!(stderr.contains("rate limit"), "{stderr}");
    assert!(!stderr.contains("ghp_topsecret") && !text(&o.stdout).contains("ghp_topsecret"));
    assert!(!dir_contains(out.path(), "ghp_topsecret"));
}

#[test]
fn commit_threshold_contract() {
    let quarter = "Fix the leak.\n\nOtherwise boot fails. See the archive. Drop the flag.";
    let o = commit_with_stdin(&[], quarter);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("warning"));
    assert_eq!(commit_with_stdin(&["--threshold", "0"], quarter).status.code(), Some(0));
    assert_eq!(commit_with_stdin(&["--threshold", "0.25"], quarter).status.code(), Some(0));
    assert_eq!(commit_with_stdin(&["--threshold", "1.5"], quarter).status.code(), Some(2));
    assert_eq!(commit_with_stdin(&[], "").status.code(), Some(0));
    assert_eq!(commit_with_stdin(&["--strict"], "Signed-off-by: A <a@x>\n").status.code(), Some(2));
}

#[test]
fn commit_doc_format_and_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("msg.txt");
    std::fs::write(&path, "Fix leak. Otherwise boot fails.").unwrap();
    let o = comrat(&["commit", "--file", path.to_str().unwrap(), "--format", "doc"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["number_of_sentences"], 2);
    assert_eq!(v["rationale_density"], 0.5);
    assert_eq!(v["verdict"], "success");
    let o = comrat(&["commit", "--file", "/nonexistent/msg"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn commit_with_adapter_uses_its_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let stub = write_stub(dir.path(), StubAdapter::Echo);
    let spec = format!("adapter:{}", stub.display());
    // Echo: ids 0 and 3 are rationale, so 2 of 4.
    let o = commit_with_stdin(&["--classifier", &spec, "--format", "doc"], "A one. B two. C three. D four.");
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rationale_density"], 0.5);

    let crash = write_stub(dir.path(), StubAdapter::CrashAfter(1));
    let o = commit_with_stdin(&["--classifier", &format!("adapter:{}", crash.display())], "A one. B two.");
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn serve_answers_health_and_stops_on_sigterm() {
    let mut child = comrat(&["serve", "--addr", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    let addr = first.trim_start_matches("listening on http://").to_string();
    let status = tokio::runtime::Runtime::new().unwrap().block_on(async {
        reqwest::get(format!("http://{addr}/api/health")).await.unwrap().status()
    });
    assert_eq!(status, 200);
    Command::new("kill").args(["-TERM", &child.id().to_string()]).status().unwrap();
    let exit = child.wait().unwrap();
    assert!(exit.success(), "{exit:?}");
}

#[test]
fn serve_on_occupied_port_fails() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = comrat(&["serve", "--addr", &addr]).output().unwrap();
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains(&addr));
}

#[test]
fn serve_refuses_missing_adapter() {
    let o = comrat(&["serve", "--addr", "127.0.0.1:0", "--classifier", "adapter:/nonexistent/cls --x"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_and_service_reports_are_identical() {
    let mock = MockGitHub::start(MockConfig::new(fixtures::three_page_history())).await;
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let url = mock.commits_url("mm/slob.c");
    let o = run(comrat(&["module", "--url", &url, "--cache", cache.to_str().unwrap(), "--out", out.to_str().unwrap()])).await;
    assert!(o.status.success(), "{}", text(&o.stderr));
    let cli_report = std::fs::read_to_string(out.join("report.json")).unwrap();
    let cli_csv = std::fs::read(out.join("dataset.csv")).unwrap();

    let mut cfg = ServiceConfig::new(Arc::new(Lexicon::builtin()));
    cfg.cache_dir = Some(cache);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(serve(listener, App::new(cfg), std::future::pending()));
    let client = reqwest::Client::new();
    let job: serde_json::Value = client
        .post(format!("{base}/api/module-analysis"))
        .body(serde_json::json!({ "module_url": url }).to_string())
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = job["job_id"].as_str().unwrap();
    loop {
        let s: serde_json::Value = client.get(format!("{base}/api/jobs/{id}")).send().await.unwrap().json().await.unwrap();
        match s["state"].as_str().unwrap() {
            "done" => break,
            "failed" => panic!("{s}"),
            _ => tokio::time::sleep(std::time::Duration::from_millis(10)).await,
        }
    }
    let svc_report = client.get(format!("{base}/api/jobs/{id}/report")).send().await.unwrap().text().await.unwrap();
    let svc_csv = client.get(format!("{base}/api/jobs/{id}/dataset.csv")).send().await.unwrap().bytes().await.unwrap();
    assert_eq!(svc_report, cli_report);
    assert_eq!(&svc_csv[..], &cli_csv[..]);
}
