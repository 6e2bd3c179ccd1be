//! Commit collection over a forge's REST API (GitHub-compatible).
//!
//! `GET {base}/repos/{owner}/{repo}/commits?per_page=N&page=K` is requested
//! until a page comes back short. When the forge signals an exhausted rate
//! limit the client sleeps until the advertised reset and retries the page.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Deserialize;
use thiserror::Error;

use super::{CommitRecord, Corpus, CorpusError, Provenance};

pub const TOKEN_ENV: &str = "CQL_FORGE_TOKEN";
pub const DEFAULT_API_URL: &str = "https://api.github.com";

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("page size must be in 1..=100, got {0}")]
    PageSize(u32),
    #[error("repository must be given as owner/name, got {0:?}")]
    RepoSpec(String),
    #[error("unknown repository {0}")]
    UnknownRepo(String),
    #[error("authentication failed (HTTP {0}); set {TOKEN_ENV}")]
    Auth(u16),
    #[error("unexpected HTTP {status} from {url}")]
    Status { status: u16, url: String },
    #[error("rate limit still exhausted after {0} retries")]
    RateLimitRetries(u32),
    #[error("http: {0}")]
    Http(#[from] ureq::Error),
    #[error("decoding page {page}: {source}")]
    Decode { page: u32, source: serde_json::Error },
    #[error("commit {sha}: {reason}")]
    Record { sha: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Progress notifications emitted while paginating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchEvent {
    Page { page: u32, commits: usize },
    RateLimited { page: u32, wait: Duration },
}

/// Optional `since`/`until` bounds, ISO 8601 strings passed through to the API.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchWindow {
    pub since: Option<String>,
    pub until: Option<String>,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct ForgeClient {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
    sleeper: Sleeper,
    max_rate_limit_retries: u32,
}

#[derive(Deserialize)]
struct ApiCommit {
    sha: String,
    commit: ApiCommitDetail,
    author: Option<ApiAccount>,
    #[serde(default)]
    files: Vec<ApiFile>,
}

#[derive(Deserialize)]
struct ApiCommitDetail {
    message: String,
    author: Option<ApiSignature>,
}

#[derive(Deserialize)]
struct ApiSignature {
    name: Option<String>,
    date: Option<String>,
}

#[derive(Deserialize)]
#[allow(dead_code)]
struct ApiAccount {
    login: Option<String>,
}

#[derive(Deserialize)]
struct ApiFile {
    filename: String,
}

impl ForgeClient {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        ForgeClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token,
            agent,
            sleeper: Box::new(std::thread::sleep),
            max_rate_limit_retries: 5,
        }
    }

    /// Client for `base_url` authenticated with `CQL_FORGE_TOKEN` when set.
    pub fn from_env(base_url: impl Into<String>) -> Self {
        let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Self::new(base_url, token)
    }

    /// Replaces the function used to wait out rate limits.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn fetch_commits(
        &self,
        repo: &str,
        page_size: u32,
        window: &FetchWindow,
        mut on_event: impl FnMut(FetchEvent),
    ) -> Result<Corpus, ForgeError> {
        if !(1..=100).contains(&page_size) {
            return Err(ForgeError::PageSize(page_size));
        }
        let (owner, name) = repo
            .split_once('/')
            .filter(|(o, n)| !o.is_empty() && !n.is_empty() && !n.contains('/'))
            .ok_or_else(|| ForgeError::RepoSpec(repo.to_string()))?;

        let mut records = Vec::new();
        let mut page = 1u32;
        loop {
            let mut url = format!(
                "{}/repos/{owner}/{name}/commits?per_page={page_size}&page={page}",
                self.base_url
            );
            if let Some(since) = &window.since {
                url.push_str(&format!("&since={since}"));
            }
            if let Some(until) = &window.until {
                url.push_str(&format!("&until={until}"));
            }
            let body = self.get_with_retry(&url, repo, page, &mut on_event)?;
            let items: Vec<ApiCommit> =
                serde_json::from_str(&body).map_err(|source| ForgeError::Decode { page, source })?;
            let n = items.len();
            on_event(FetchEvent::Page { page, commits: n });
            for item in items {
                records.push(to_record(repo, item)?);
            }
            if n < page_size as usize {
                break;
            }
            page += 1;
        }
        Ok(Corpus::new(
            records,
            Provenance::Forge {
                api_url: format!("{}/repos/{owner}/{name}/commits", self.base_url),
                since: window.since.clone(),
                until: window.until.clone(),
            },
        )?)
    }

    fn get_with_retry(
        &self,
        url: &str,
        repo: &str,
        page: u32,
        on_event: &mut impl FnMut(FetchEvent),
    ) -> Result<String, ForgeError> {
        let mut retries = 0;
        loop {
            let mut req = self
                .agent
                .get(url)
                .header("Accept", "application/vnd.github+json")
                .header("User-Agent", "cql-commit-quality");
            if let Some(token) = &self.token {
                req = req.header("Authorization", format!("Bearer {token}"));
            }
            let mut resp = req.call()?;
            let status = resp.status().as_u16();
            let header = |name: &str| {
                resp.headers()
                    .get(name)
                    .and_then(|v| v.to_str().ok())
                    .map(str::to_string)
            };
            if let Some(wait) = rate_limit_wait(status, header("x-ratelimit-remaining"), header("x-ratelimit-reset"), header("retry-after")) {
                if retries >= self.max_rate_limit_retries {
                    return Err(ForgeError::RateLimitRetries(retries));
                }
                retries += 1;
                on_event(FetchEvent::RateLimited { page, wait });
                (self.sleeper)(wait);
                continue;
            }
            return match status {
                200..=299 => Ok(resp.body_mut().read_to_string()?),
                404 => Err(ForgeError::UnknownRepo(repo.to_string())),
                401 | 403 => Err(ForgeError::Auth(status)),
                _ => Err(ForgeError::Status { status, url: url.to_string() }),
            };
        }
    }
}

/// Time to wait before retrying, or `None` when the response is not a
/// rate-limit rejection.
fn rate_limit_wait(
    status: u16,
    remaining: Option<String>,
    reset: Option<String>,
    retry_after: Option<String>,
) -> Option<Duration> {
    if status != 403 && status != 429 {
        return None;
    }
    if let Some(secs) = retry_after.and_then(|v| v.trim().parse::<u64>().ok()) {
        return Some(Duration::from_secs(secs));
    }
    if remaining.as_deref().map(str::trim) != Some("0") {
        return None;
    }
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let reset = reset.and_then(|v| v.trim().parse::<u64>().ok()).unwrap_or(now + 60);
    Some(Duration::from_secs(reset.saturating_sub(now) + 1))
}

fn to_record(repo: &str, item: ApiCommit) -> Result<CommitRecord, ForgeError> {
    let signature = item.commit.author;
    let author_name = signature.as_ref().and_then(|s| s.name.clone()).unwrap_or_default();
    let timestamp_utc = match signature.as_ref().and_then(|s| s.date.as_deref()) {
        Some(date) => chrono::DateTime::parse_from_rfc3339(date)
            .map_err(|e| ForgeError::Record { sha: item.sha.clone(), reason: format!("bad date {date:?}: {e}") })?
            .timestamp(),
        None => 0,
    };
    let mut record = CommitRecord::new(repo, item.sha, author_name, item.commit.message);
    record.author_is_account = item.author.is_some();
    record.timestamp_utc = timestamp_utc;
    let mut seen = std::collections::HashSet::new();
    record.changed_paths = item
        .files
        .into_iter()
        .map(|f| f.filename)
        .filter(|f| seen.insert(f.clone()))
        .collect();
    record
        .validate()
        .map_err(|reason| ForgeError::Record { sha: record.sha.clone(), reason })?;
    Ok(record)
}

/// Convenience wrapper: fetch `repo` from the public API using the token in
/// `CQL_FORGE_TOKEN`.
pub fn fetch_commits_rest(
    repo: &str,
    auth_token: Option<String>,
    page_size: u32,
) -> Result<Corpus, ForgeError> {
    let token = auth_token.or_else(|| std::env::var(TOKEN_ENV).ok());
    ForgeClient::new(DEFAULT_API_URL, token).fetch_commits(repo, page_size, &FetchWindow::default(), |_| {})
}
