use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{HttpRequest, Transport, TransportError};
use crate::retry::RetryPolicy;

pub const DEFAULT_HIT_LIMIT: usize = 5;
pub const SEARCH_FIXTURE_FILE: &str = "search.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    /// 1-based position in the provider's result list.
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("search query is empty")]
    EmptyQuery,
    #[error("search provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("search quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("no recorded search results for query {query:?}")]
    FixtureMissing { query: String },
    #[error("search provider misconfigured: {0}")]
    Misconfigured(String),
    #[error(transparent)]
    Transport(TransportError),
}

impl SearchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, SearchError::ProviderUnavailable(_) | SearchError::QuotaExceeded(_))
    }
}

/// Returns raw hits (url + title) in provider order; ranks are assigned by
/// [`web_search`].
pub trait SearchProvider: Send + Sync {
    fn name(&self) -> &str;
    fn search(&self, query: &str, limit: usize) -> Result<Vec<(String, Option<String>)>, SearchError>;
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchFixtures {
    pub queries: HashMap<String, Vec<RecordedHit>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedHit {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// Serves recorded result lists keyed by the exact query string.
#[derive(Debug, Default)]
pub struct FixtureSearchProvider {
    fixtures: SearchFixtures,
}

impl FixtureSearchProvider {
    pub fn new(fixtures: SearchFixtures) -> Self {
        Self { fixtures }
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| SearchError::Misconfigured(format!("{}: {e}", path.display())))?;
        let fixtures = serde_json::from_str(&raw)
            .map_err(|e| SearchError::Misconfigured(format!("{}: {e}", path.display())))?;
        Ok(Self { fixtures })
    }

    pub fn with(mut self, query: &str, urls: &[&str]) -> Self {
        self.fixtures.queries.insert(
            query.to_string(),
            urls.iter().map(|u| RecordedHit { url: u.to_string(), title: None }).collect(),
        );
        self
    }
}

impl SearchProvider for FixtureSearchProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    fn search(&self, query: &str, _limit: usize) -> Result<Vec<(String, Option<String>)>, SearchError> {
        self.fixtures
            .queries
            .get(query)
            .map(|hits| hits.iter().map(|h| (h.url.clone(), h.title.clone())).collect())
            .ok_or_else(|| SearchError::FixtureMissing { query: query.to_string() })
    }
}

pub const GOOGLE_ENDPOINT: &str = "https://www.googleapis.com/customsearch/v1";
pub const GOOGLE_KEY_ENV: &str = "KGTRACE_GOOGLE_API_KEY";
pub const GOOGLE_CX_ENV: &str = "KGTRACE_GOOGLE_CX";

/// Google Programmable Search (Custom Search JSON API). The key travels in a
/// header so it never reaches request fingerprints or recorded fixtures.
pub struct GoogleSearchProvider {
    transport: Arc<dyn Transport>,
    api_key: String,
    engine_id: String,
    endpoint: String,
}

impl GoogleSearchProvider {
    pub fn new(transport: Arc<dyn Transport>, api_key: impl Into<String>, engine_id: impl Into<String>) -> Self {
        Self { transport, api_key: api_key.into(), engine_id: engine_id.into(), endpoint: GOOGLE_ENDPOINT.into() }
    }

    pub fn from_env(transport: Arc<dyn Transport>) -> Result<Self, SearchError> {
        let key = std::env::var(GOOGLE_KEY_ENV).map_err(|_| SearchError::Misconfigured(format!("{GOOGLE_KEY_ENV} not set")))?;
        let cx = std::env::var(GOOGLE_CX_ENV).map_err(|_| SearchError::Misconfigured(format!("{GOOGLE_CX_ENV} not set")))?;
        Ok(Self::new(transport, key, cx))
    }

    pub fn request(&self, query: &str, limit: usize) -> HttpRequest {
        HttpRequest::get(&self.endpoint)
            .query("cx", &self.engine_id)
            .query("q", query)
            .query("num", limit.clamp(1, 10).to_string())
            .header("X-goog-api-key", &self.api_key)
    }
}

#[derive(Deserialize)]
struct GoogleResults {
    #[serde(default)]
    items: Vec<GoogleItem>,
}

#[derive(Deserialize)]
struct GoogleItem {
    link: String,
    title: Option<String>,
}

impl SearchProvider for GoogleSearchProvider {
    fn name(&self) -> &str {
        "google"
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<(String, Option<String>)>, SearchError> {
        let response = self.transport.send(&self.request(query, limit)).map_err(|e| match e {
            TransportError::Timeout { .. } | TransportError::Connection { .. } => {
                SearchError::ProviderUnavailable(e.to_string())
            }
            other => SearchError::Transport(other),
        })?;
        let body = response.text();
        match response.status {
            200..=299 => {}
            429 => return Err(SearchError::QuotaExceeded(format!("HTTP 429"))),
            403 if body.contains("imitExceeded") => return Err(SearchError::QuotaExceeded("HTTP 403".into())),
            s if s >= 500 => return Err(SearchError::ProviderUnavailable(format!("HTTP {s}"))),
            s => return Err(SearchError::Misconfigured(format!("HTTP {s}"))),
        }
        let parsed: GoogleResults =
            serde_json::from_str(&body).map_err(|e| SearchError::ProviderUnavailable(format!("bad response: {e}")))?;
        Ok(parsed.items.into_iter().map(|i| (i.link, i.title)).collect())
    }
}

/// Takes the provider's top `limit` results, then drops repeated URLs,
/// keeping the first (best-ranked) occurrence and its original rank.
pub fn web_search(
    provider: &dyn SearchProvider,
    query: &str,
    limit: usize,
    retry: &RetryPolicy,
) -> Result<Vec<SearchHit>, SearchError> {
    if query.trim().is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    let raw = retry.run(SearchError::is_retryable, |_| provider.search(query, limit))?;
    let mut seen = HashSet::new();
    Ok(raw
        .into_iter()
        .take(limit)
        .enumerate()
        .filter(|(_, (url, _))| seen.insert(url.clone()))
        .map(|(idx, (url, title))| SearchHit { url, rank: idx + 1, title })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{FixtureTransport, HttpResponse};
    use std::sync::atomic::{AtomicU32, Ordering};

    fn oracle_dedup(urls: &[&str], limit: usize) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for (i, u) in urls.iter().enumerate().take(limit) {
            if !out.iter().any(|(seen, _)| seen == u) {
                out.push((u.to_string(), i + 1));
            }
        }
        out
    }

    #[test]
    fn fewer_hits_than_limit() {
        let p = FixtureSearchProvider::default().with("q", &["https://a", "https://b"]);
        let hits = web_search(&p, "q", 5, &RetryPolicy::immediate(1)).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[1].rank, 2);
    }

    #[test]
    fn truncates_then_dedups() {
        let urls = ["https://a", "https://b", "https://a", "https://c", "https://d", "https://e", "https://f"];
        let p = FixtureSearchProvider::default().with("q", &urls);
        let hits = web_search(&p, "q", 5, &RetryPolicy::immediate(1)).unwrap();
        let got: Vec<(String, usize)> = hits.into_iter().map(|h| (h.url, h.rank)).collect();
        assert_eq!(got, oracle_dedup(&urls, 5));
        assert_eq!(got.len(), 4);
    }

    #[test]
    fn same_url_twice_is_one_hit() {
        let p = FixtureSearchProvider::default().with("q", &["https://x", "https://x"]);
        assert_eq!(web_search(&p, "q", 5, &RetryPolicy::immediate(1)).unwrap().len(), 1);
    }

    #[test]
    fn empty_query_rejected() {
        let p = FixtureSearchProvider::default();
        assert_eq!(web_search(&p, "  ", 5, &RetryPolicy::immediate(1)), Err(SearchError::EmptyQuery));
    }

    struct Flaky(AtomicU32);
    impl SearchProvider for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn search(&self, _: &str, _: usize) -> Result<Vec<(String, Option<String>)>, SearchError> {
            if self.0.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(SearchError::QuotaExceeded("slow down".into()))
            } else {
                Ok(vec![("https://ok".into(), None)])
            }
        }
    }

    #[test]
    fn quota_errors_are_retried() {
        let p = Flaky(AtomicU32::new(0));
        let hits = web_search(&p, "q", 5, &RetryPolicy::immediate(3)).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(p.0.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn google_response_parsing_and_key_outside_fingerprint() {
        let base = GoogleSearchProvider::new(Arc::new(FixtureTransport::new()), "k1", "cx");
        let other = GoogleSearchProvider::new(Arc::new(FixtureTransport::new()), "k2", "cx");
        assert_eq!(base.request("q", 5).fingerprint(), other.request("q", 5).fingerprint());

        let body = r#"{"items":[{"link":"https://a","title":"A"},{"link":"https://b"}]}"#;
        let transport = FixtureTransport::new().with(
            base.request("q", 5),
            HttpResponse { status: 200, content_type: Some("application/json".into()), body: body.into() },
        );
        let p = GoogleSearchProvider::new(Arc::new(transport), "k1", "cx");
        let hits = web_search(&p, "q", 5, &RetryPolicy::immediate(1)).unwrap();
        assert_eq!(hits[0].title.as_deref(), Some("A"));
        assert_eq!(hits[1].url, "https://b");

        let quota = FixtureTransport::new()
            .with(base.request("q", 5), HttpResponse { status: 429, content_type: None, body: Vec::new() });
        let p = GoogleSearchProvider::new(Arc::new(quota), "k1", "cx");
        assert!(matches!(p.search("q", 5), Err(SearchError::QuotaExceeded(_))));
    }
}
