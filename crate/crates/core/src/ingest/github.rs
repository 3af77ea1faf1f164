use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use reqwest::header::{HeaderMap, ACCEPT, AUTHORIZATION, LINK, USER_AGENT};
use reqwest::StatusCode;
use serde::Deserialize;
use url::Url;

use super::rate_limit::{check_rate_limit, RateDecision, RateLimitPolicy, RateLimitState};
use super::{cache, is_sha, Commit, IngestError, ModuleRef};
use crate::clock::{Clock, SystemClock};

pub const PER_PAGE: u32 = 100;

/// Transport retry schedule for 5xx responses and connection failures.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.pow(attempt)
    }
}

#[derive(Debug, Clone)]
pub struct FetchOutcome {
    pub commits: Vec<Commit>,
    pub fetched_at: DateTime<Utc>,
    pub from_cache: bool,
    pub rate_limit: Option<RateLimitState>,
}

/// Paginating GitHub commits client. One `Fetcher` may serve many modules;
/// rate-limit bookkeeping is per `fetch_commits` call.
#[derive(Clone)]
pub struct Fetcher {
    client: reqwest::Client,
    clock: Arc<dyn Clock>,
    policy: RateLimitPolicy,
    retry: RetryPolicy,
}

impl Default for Fetcher {
    fn default() -> Self {
        Self::new(Arc::new(SystemClock))
    }
}

impl Fetcher {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        let client = reqwest::Client::builder()
            .connect_timeout(Duration::from_secs(10))
            .timeout(Duration::from_secs(60))
            .build()
            .expect("http client");
        Self {
            client,
            clock,
            policy: RateLimitPolicy::default(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: RateLimitPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn policy(&self) -> RateLimitPolicy {
        self.policy
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub async fn fetch_commits(&self, module: &ModuleRef) -> Result<FetchOutcome, IngestError> {
        self.fetch_commits_with_progress(module, |_| {}).await
    }

    /// Like [`Fetcher::fetch_commits`], calling `on_progress` with the running
    /// commit count after every page.
    pub async fn fetch_commits_with_progress(
        &self,
        module: &ModuleRef,
        mut on_progress: impl FnMut(usize) + Send,
    ) -> Result<FetchOutcome, IngestError> {
        if let Some(hit) = cache::cache_load(module) {
            tracing::debug!(url = module.api_url(), commits = hit.commits.len(), "cache hit");
            on_progress(hit.commits.len());
            return Ok(FetchOutcome {
                commits: hit.commits,
                fetched_at: hit.fetched_at,
                from_cache: true,
                rate_limit: None,
            });
        }

        let mut commits = Vec::new();
        let mut seen = HashSet::new();
        let mut state: Option<RateLimitState> = None;
        let mut page = 1u32;

        loop {
            if let Some(s) = &state {
                match check_rate_limit(s, self.policy) {
                    RateDecision::Proceed => {}
                    RateDecision::WaitUntil(reset_at) => self.wait_for_reset(reset_at).await,
                    RateDecision::RateLimited(reset_at) => {
                        return Err(IngestError::RateLimited {
                            reset_at,
                            partial: commits,
                        })
                    }
                }
            }

            let url = page_url(module.url(), page);
            let resp = self.get_with_retry(&url, module).await?;
            let status = resp.status();
            let headers = resp.headers().clone();
            if let Some(s) = RateLimitState::from_headers(&headers) {
                state = Some(s);
            }

            if is_rate_limited(status, state.as_ref()) {
                let reset_at = state
                    .map(|s| s.reset_at)
                    .or_else(|| retry_after(&headers, self.clock.now()))
                    .unwrap_or_else(|| self.clock.now() + chrono::Duration::seconds(60));
                match self.policy {
                    RateLimitPolicy::Abort => {
                        return Err(IngestError::RateLimited {
                            reset_at,
                            partial: commits,
                        })
                    }
                    RateLimitPolicy::Wait => {
                        self.wait_for_reset(reset_at).await;
                        state = None;
                        continue;
                    }
                }
            }
            match status {
                s if s.is_success() => {}
                StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
                    return Err(IngestError::Auth {
                        status: status.as_u16(),
                    })
                }
                StatusCode::NOT_FOUND => return Err(IngestError::NotFound),
                s => return Err(IngestError::UnexpectedStatus { status: s.as_u16() }),
            }

            let body = resp
                .bytes()
                .await
                .map_err(|e| IngestError::Network(e.without_url().to_string()))?;
            let items: Vec<ApiCommit> = serde_json::from_slice(&body)
                .map_err(|e| IngestError::MalformedResponse(format!("page {page}: {e}")))?;
            if items.is_empty() {
                break;
            }
            for item in items {
                let commit = item.into_commit()?;
                if seen.insert(commit.sha.clone()) {
                    commits.push(commit);
                } else {
                    tracing::debug!(sha = %commit.sha, "duplicate commit skipped");
                }
            }
            on_progress(commits.len());
            if link_says_last_page(&headers) {
                break;
            }
            page += 1;
        }

        let fetched_at = self.clock.now();
        if let Err(e) = cache::cache_store(module, fetched_at, &commits) {
            tracing::warn!(error = %e, "failed to write commit cache");
        }
        Ok(FetchOutcome {
            commits,
            fetched_at,
            from_cache: false,
            rate_limit: state,
        })
    }

    async fn wait_for_reset(&self, reset_at: DateTime<Utc>) {
        let now = self.clock.now();
        // A stale reset header would otherwise turn the loop into a busy spin.
        let until = if reset_at > now {
            reset_at
        } else {
            now + chrono::Duration::seconds(1)
        };
        tracing::info!(%until, "rate limit exhausted, waiting for reset");
        self.clock.sleep_until(until).await;
    }

    async fn get_with_retry(
        &self,
        url: &Url,
        module: &ModuleRef,
    ) -> Result<reqwest::Response, IngestError> {
        let mut attempt = 0;
        loop {
            let mut req = self
                .client
                .get(url.clone())
                .header(USER_AGENT, "comrat")
                .header(ACCEPT, "application/vnd.github+json");
            if let Some(token) = module.token() {
                req = req.header(AUTHORIZATION, format!("Bearer {}", token.expose()));
            }
            let failure = match req.send().await {
                Ok(resp) if resp.status().is_server_error() => {
                    format!("server returned HTTP {}", resp.status().as_u16())
                }
                Ok(resp) => return Ok(resp),
                Err(e) => e.without_url().to_string(),
            };
            if attempt >= self.retry.max_retries {
                return Err(IngestError::Network(failure));
            }
            let delay = self.retry.delay(attempt);
            tracing::warn!(%failure, attempt, ?delay, "request failed, retrying");
            let deadline = self.clock.now() + chrono::Duration::from_std(delay).unwrap();
            self.clock.sleep_until(deadline).await;
            attempt += 1;
        }
    }
}

/// Fetches with a default wall-clock [`Fetcher`].
pub async fn fetch_commits(module: &ModuleRef) -> Result<FetchOutcome, IngestError> {
    Fetcher::default().fetch_commits(module).await
}

fn page_url(base: &Url, page: u32) -> Url {
    let kept: Vec<(String, String)> = base
        .query_pairs()
        .filter(|(k, _)| k != "page" && k != "per_page")
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let mut url = base.clone();
    url.query_pairs_mut()
        .clear()
        .extend_pairs(kept)
        .append_pair("per_page", &PER_PAGE.to_string())
        .append_pair("page", &page.to_string());
    url
}

fn is_rate_limited(status: StatusCode, state: Option<&RateLimitState>) -> bool {
    match status {
        StatusCode::TOO_MANY_REQUESTS => true,
        StatusCode::FORBIDDEN => state.is_some_and(|s| s.remaining == 0),
        _ => false,
    }
}

fn retry_after(headers: &HeaderMap, now: DateTime<Utc>) -> Option<DateTime<Utc>> {
    let secs: i64 = headers.get("retry-after")?.to_str().ok()?.trim().parse().ok()?;
    Some(now + chrono::Duration::seconds(secs))
}

fn link_says_last_page(headers: &HeaderMap) -> bool {
    match headers.get(LINK).and_then(|v| v.to_str().ok()) {
        Some(link) => !link.contains("rel=\"next\""),
        None => false,
    }
}

#[derive(Deserialize)]
struct ApiCommit {
    sha: String,
    commit: ApiCommitDetail,
}

#[derive(Deserialize)]
struct ApiCommitDetail {
    author: Option<ApiSignature>,
    committer: Option<ApiSignature>,
    #[serde(default)]
    message: String,
}

#[derive(Deserialize)]
struct ApiSignature {
    name: Option<String>,
    email: Option<String>,
    date: Option<DateTime<Utc>>,
}

impl ApiCommit {
    fn into_commit(self) -> Result<Commit, IngestError> {
        if !is_sha(&self.sha) {
            return Err(IngestError::MalformedResponse(format!(
                "invalid sha `{}`",
                self.sha
            )));
        }
        let detail = self.commit;
        let committed_at = detail
            .committer
            .as_ref()
            .and_then(|c| c.date)
            .or_else(|| detail.author.as_ref().and_then(|a| a.date))
            .ok_or_else(|| {
                IngestError::MalformedResponse(format!("commit {} has no date", self.sha))
            })?;
        let (name, email) = detail
            .author
            .map(|a| (a.name.unwrap_or_default(), a.email.unwrap_or_default()))
            .unwrap_or_default();
        let author_id = if email.trim().is_empty() {
            name.clone()
        } else {
            email
        };
        Ok(Commit {
            sha: self.sha.to_ascii_lowercase(),
            author_id,
            author_name: name,
            committed_at: committed_at.with_nanosecond_zero(),
            message: detail.message,
        })
    }
}

trait TruncateSubsec {
    fn with_nanosecond_zero(self) -> Self;
}

impl TruncateSubsec for DateTime<Utc> {
    fn with_nanosecond_zero(self) -> Self {
        use chrono::Timelike;
        self.with_nanosecond(0).unwrap_or(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn page_url_replaces_paging_params() {
        let base =
            Url::parse("https://api.github.com/repos/a/b/commits?path=mm/slob.c&page=7").unwrap();
        let url = page_url(&base, 2);
        assert_eq!(
            url.as_str(),
            "https://api.github.com/repos/a/b/commits?path=mm%2Fslob.c&per_page=100&page=2"
        );
    }

    #[test]
    fn author_id_prefers_email() {
        let json = r#"{"sha":"0123456789abcdef0123456789abcdef01234567",
            "commit":{"author":{"name":"A B","email":"a@b.c","date":"2019-01-02T03:04:05Z"},
                      "committer":{"name":"C","email":"c@d","date":"2019-01-03T00:00:00Z"},
                      "message":"Fix it."}}"#;
        let c = serde_json::from_str::<ApiCommit>(json).unwrap().into_commit().unwrap();
        assert_eq!(c.author_id, "a@b.c");
        assert_eq!(c.author_name, "A B");
        assert_eq!(c.committed_at.to_rfc3339(), "2019-01-03T00:00:00+00:00");

        let json = r#"{"sha":"0123456789abcdef0123456789abcdef01234567",
            "commit":{"author":{"name":"A B","email":"","date":"2019-01-02T03:04:05Z"},
                      "message":""}}"#;
        let c = serde_json::from_str::<ApiCommit>(json).unwrap().into_commit().unwrap();
        assert_eq!(c.author_id, "A B");
        assert_eq!(c.message, "");
    }

    #[test]
    fn bad_sha_is_malformed() {
        let json = r#"{"sha":"xyz","commit":{"message":"m","author":{"date":"2019-01-02T03:04:05Z"}}}"#;
        let err = serde_json::from_str::<ApiCommit>(json)
            .unwrap()
            .into_commit()
            .unwrap_err();
        assert!(matches!(err, IngestError::MalformedResponse(_)));
    }

    #[test]
    fn link_header_shortcut() {
        let mut h = HeaderMap::new();
        assert!(!link_says_last_page(&h));
        h.insert(
            LINK,
            r#"<https://x/commits?page=3>; rel="next", <https://x/commits?page=5>; rel="last""#
                .parse()
                .unwrap(),
        );
        assert!(!link_says_last_page(&h));
        h.insert(LINK, r#"<https://x/commits?page=1>; rel="first""#.parse().unwrap());
        assert!(link_says_last_page(&h));
    }

    #[test]
    fn backoff_doubles() {
        let r = RetryPolicy::default();
        let delays: Vec<_> = (0..3).map(|a| r.delay(a).as_secs()).collect();
        assert_eq!(delays, [1, 2, 4]);
    }
}
