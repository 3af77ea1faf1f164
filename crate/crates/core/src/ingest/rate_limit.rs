use chrono::{DateTime, TimeZone, Utc};
use reqwest::header::HeaderMap;
use serde::{Deserialize, Serialize};

/// What to do when the hourly budget is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateLimitPolicy {
    /// Sleep until the reset instant, then continue.
    #[default]
    Wait,
    /// Stop and report `RateLimited` with whatever was fetched so far.
    Abort,
}

impl std::str::FromStr for RateLimitPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wait" => Ok(Self::Wait),
            "abort" => Ok(Self::Abort),
            other => Err(format!("unknown rate-limit policy `{other}` (expected wait|abort)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateLimitState {
    pub remaining: u64,
    pub reset_at: DateTime<Utc>,
}

impl RateLimitState {
    /// Reads `X-RateLimit-Remaining` and `X-RateLimit-Reset` (epoch seconds).
    pub fn from_headers(headers: &HeaderMap) -> Option<Self> {
        let read = |name: &str| -> Option<i64> {
            headers.get(name)?.to_str().ok()?.trim().parse().ok()
        };
        let remaining = read("x-ratelimit-remaining")?;
        let reset = read("x-ratelimit-reset")?;
        Some(Self {
            remaining: remaining.max(0) as u64,
            reset_at: Utc.timestamp_opt(reset, 0).single()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDecision {
    Proceed,
    WaitUntil(DateTime<Utc>),
    RateLimited(DateTime<Utc>),
}

pub fn check_rate_limit(state: &RateLimitState, policy: RateLimitPolicy) -> RateDecision {
    if state.remaining > 0 {
        return RateDecision::Proceed;
    }
    match policy {
        RateLimitPolicy::Wait => RateDecision::WaitUntil(state.reset_at),
        RateLimitPolicy::Abort => RateDecision::RateLimited(state.reset_at),
    }
}
