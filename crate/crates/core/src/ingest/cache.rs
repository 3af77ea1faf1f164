//! On-disk commit cache, one JSON file per module URL.
//!
//! Entries never expire. The token is not part of the key or the payload.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Commit, ModuleRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedCommits {
    pub api_url: String,
    pub fetched_at: DateTime<Utc>,
    pub commits: Vec<Commit>,
}

pub fn cache_path(dir: &Path, api_url: &str) -> PathBuf {
    let digest = Sha256::digest(api_url.as_bytes());
    dir.join(format!("commits-{}.json", hex::encode(digest)))
}

/// Writes the commit list for `module`. A module without a cache dir is a no-op
/// returning `Ok(None)`.
pub fn cache_store(
    module: &ModuleRef,
    fetched_at: DateTime<Utc>,
    commits: &[Commit],
) -> io::Result<Option<PathBuf>> {
    let Some(dir) = module.cache_dir() else {
        return Ok(None);
    };
    fs::create_dir_all(dir)?;
    let entry = CachedCommits {
        api_url: module.api_url().to_string(),
        fetched_at,
        commits: commits.to_vec(),
    };
    let path = cache_path(dir, module.api_url());
    let tmp = path.with_extension("json.tmp");
    let body = serde_json::to_vec_pretty(&entry).map_err(io::Error::other)?;
    fs::write(&tmp, body)?;
    fs::rename(&tmp, &path)?;
    Ok(Some(path))
}

/// Returns `None` on a miss. Unreadable or corrupt files count as misses.
pub fn cache_load(module: &ModuleRef) -> Option<CachedCommits> {
    let dir = module.cache_dir()?;
    let path = cache_path(dir, module.api_url());
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return None,
        Err(e) => {
            tracing::warn!(path = %path.display(), error = %e, "cannot read commit cache");
            return None;
        }
    };
    match serde_json::from_slice::<CachedCommits>(&bytes) {
        Ok(entry) if entry.api_url == module.api_url() => Some(entry),
        Ok(_) => {
            tracing::warn!(path = %path.display(), "commit cache belongs to another URL");
            None
        }
        Err(e) => {
            tracing::warn!(path = %path.display(), error = %e, "corrupt commit cache ignored");
            None
        }
    }
}
