//! Commit history ingestion from the GitHub REST API.

mod cache;
mod github;
mod rate_limit;

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

pub use cache::{cache_load, cache_path, cache_store, CachedCommits};
pub use github::{fetch_commits, FetchOutcome, Fetcher, RetryPolicy};
pub use rate_limit::{check_rate_limit, RateDecision, RateLimitPolicy, RateLimitState};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("invalid module URL `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("GitHub rejected the credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("GitHub API rate limit exhausted; resets at {reset_at}")]
    RateLimited {
        reset_at: DateTime<Utc>,
        /// Commits fetched before the limit was hit.
        partial: Vec<Commit>,
    },
    #[error("module not found (HTTP 404)")]
    NotFound,
    #[error("unexpected HTTP status {status}")]
    UnexpectedStatus { status: u16 },
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed API response: {0}")]
    MalformedResponse(String),
    #[error("cache I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// API token. Never printed by `Debug` or `Display`.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiToken(String);

impl ApiToken {
    pub fn new(token: impl Into<String>) -> Self {
        Self(token.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiToken(***)")
    }
}

/// A module to analyze: a GitHub commits endpoint filtered by `path`.
#[derive(Debug, Clone)]
pub struct ModuleRef {
    api_url: Url,
    token: Option<ApiToken>,
    cache_dir: Option<PathBuf>,
}

impl ModuleRef {
    /// Validates `api_url`. Plain `http` is accepted only for loopback hosts.
    pub fn new(api_url: &str) -> Result<Self, IngestError> {
        let invalid = |reason: &str| IngestError::InvalidUrl {
            url: api_url.to_string(),
            reason: reason.to_string(),
        };
        let url = Url::parse(api_url).map_err(|e| invalid(&e.to_string()))?;
        match url.scheme() {
            "https" => {}
            "http" if is_loopback(&url) => {}
            _ => return Err(invalid("scheme must be https")),
        }
        let path = url.path();
        if !path.contains("/repos/") || !path.contains("/commits") {
            return Err(invalid("path must point at /repos/{owner}/{repo}/commits"));
        }
        Ok(Self {
            api_url: url,
            token: None,
            cache_dir: None,
        })
    }

    pub fn with_token(mut self, token: Option<ApiToken>) -> Self {
        self.token = token.filter(|t| !t.expose().is_empty());
        self
    }

    pub fn with_cache_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    pub fn api_url(&self) -> &str {
        self.api_url.as_str()
    }

    pub fn url(&self) -> &Url {
        &self.api_url
    }

    pub fn token(&self) -> Option<&ApiToken> {
        self.token.as_ref()
    }

    pub fn cache_dir(&self) -> Option<&Path> {
        self.cache_dir.as_deref()
    }
}

fn is_loopback(url: &Url) -> bool {
    match url.host() {
        Some(url::Host::Domain(d)) => d == "localhost",
        Some(url::Host::Ipv4(ip)) => ip.is_loopback(),
        Some(url::Host::Ipv6(ip)) => ip.is_loopback(),
        None => false,
    }
}

/// One commit of the module history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub sha: String,
    /// Author email when present, author name otherwise.
    pub author_id: String,
    pub author_name: String,
    pub committed_at: DateTime<Utc>,
    pub message: String,
}

pub(crate) fn is_sha(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit())
}
