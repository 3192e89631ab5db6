use std::sync::Arc;
use std::sync::Mutex;
use std::thread;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::html::{extract_paragraphs, revision_id, strip_archive_toolbar, ExtractedParagraph};
use crate::clock::Clock;
use crate::http::{HttpRequest, HttpResponse, Transport, TransportError};
use crate::model::RetrievalSource;

pub const DEFAULT_ARCHIVE_API: &str = "https://archive.org/wayback/available";
pub const DEFAULT_FETCH_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingDocument {
    /// The URL that was asked for (the original URL even when archived).
    pub url: String,
    pub retrieval_source: RetrievalSource,
    /// Snapshot URL the content came from, for archived copies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_url: Option<String>,
    pub media_type: String,
    pub paragraphs: Vec<String>,
    pub paragraph_html: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision_id: Option<u64>,
    pub fetched_at: DateTime<Utc>,
}

impl GroundingDocument {
    /// URL of the content actually read.
    pub fn content_url(&self) -> &str {
        self.archive_url.as_deref().unwrap_or(&self.url)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FetchError {
    #[error("invalid URL {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("unsupported media type {media_type} at {url}")]
    UnsupportedMediaType { url: String, media_type: String },
    #[error("{url} unavailable: {reason}")]
    Unavailable { url: String, reason: String },
    #[error("{url} unavailable live and in the Web Archive: {reason}")]
    UnavailableEverywhere { url: String, reason: String },
    #[error(transparent)]
    Transport(TransportError),
}

impl FetchError {
    /// Short machine-readable reason used in skip records.
    pub fn skip_code(&self) -> &'static str {
        match self {
            FetchError::InvalidUrl { .. } => "invalidUrl",
            FetchError::UnsupportedMediaType { .. } => "unsupportedMediaType",
            FetchError::Unavailable { .. } => "unavailable",
            FetchError::UnavailableEverywhere { .. } => "unavailableEverywhere",
            FetchError::Transport(_) => "transport",
        }
    }
}

fn is_html(media_type: &str) -> bool {
    matches!(media_type, "text/html" | "application/xhtml+xml")
}

fn sniff_media_type(url: &str, response: &HttpResponse) -> String {
    if response.body.starts_with(b"%PDF") {
        return "application/pdf".into();
    }
    if let Some(declared) = response.media_type() {
        return declared;
    }
    if url.to_ascii_lowercase().split(['?', '#']).next().is_some_and(|p| p.ends_with(".pdf")) {
        return "application/pdf".into();
    }
    "text/html".into()
}

#[derive(Deserialize)]
struct Availability {
    #[serde(default)]
    archived_snapshots: Snapshots,
}

#[derive(Deserialize, Default)]
struct Snapshots {
    closest: Option<Snapshot>,
}

#[derive(Deserialize)]
struct Snapshot {
    #[serde(default)]
    available: bool,
    url: String,
}

pub struct Fetcher {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    archive_api: String,
}

impl Fetcher {
    pub fn new(transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Self {
        Self { transport, clock, archive_api: DEFAULT_ARCHIVE_API.into() }
    }

    pub fn with_archive_api(mut self, endpoint: impl Into<String>) -> Self {
        self.archive_api = endpoint.into();
        self
    }

    fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
        self.transport.send(&HttpRequest::get(url)).map_err(|e| match e {
            TransportError::Timeout { .. } | TransportError::Connection { .. } => {
                FetchError::Unavailable { url: url.to_string(), reason: e.to_string() }
            }
            other => FetchError::Transport(other),
        })
    }

    fn build(
        &self,
        url: &str,
        response: HttpResponse,
        source: RetrievalSource,
        archive_url: Option<String>,
    ) -> Result<(GroundingDocument, String), FetchError> {
        if response.status >= 400 {
            return Err(FetchError::Unavailable { url: url.to_string(), reason: format!("HTTP {}", response.status) });
        }
        let content_url = archive_url.as_deref().unwrap_or(url);
        let media_type = sniff_media_type(content_url, &response);
        if !is_html(&media_type) {
            return Err(FetchError::UnsupportedMediaType { url: url.to_string(), media_type });
        }
        let mut html = response.text();
        if source == RetrievalSource::WebArchive {
            html = strip_archive_toolbar(&html);
        }
        let (paragraphs, paragraph_html): (Vec<_>, Vec<_>) =
            extract_paragraphs(&html).into_iter().map(|ExtractedParagraph { text, html }| (text, html)).unzip();
        let doc = GroundingDocument {
            url: url.to_string(),
            retrieval_source: source,
            archive_url,
            media_type,
            paragraphs,
            paragraph_html,
            revision_id: revision_id(&html),
            fetched_at: self.clock.now(),
        };
        Ok((doc, html))
    }

    pub fn fetch_document(&self, url: &str) -> Result<GroundingDocument, FetchError> {
        self.fetch_document_with_html(url).map(|(doc, _)| doc)
    }

    /// Like [`fetch_document`](Self::fetch_document), also returning the page HTML.
    pub fn fetch_document_with_html(&self, url: &str) -> Result<(GroundingDocument, String), FetchError> {
        Url::parse(url).map_err(|e| FetchError::InvalidUrl { url: url.to_string(), reason: e.to_string() })?;
        let response = self.get(url)?;
        self.build(url, response, RetrievalSource::Direct, None)
    }

    /// Nearest archived snapshot URL, if the Web Archive has one.
    pub fn archived_snapshot(&self, url: &str) -> Result<Option<String>, FetchError> {
        let request = HttpRequest::get(&self.archive_api).query("url", url);
        let response = self.transport.send(&request).map_err(|e| match e {
            TransportError::Timeout { .. } | TransportError::Connection { .. } => {
                FetchError::UnavailableEverywhere { url: url.to_string(), reason: e.to_string() }
            }
            other => FetchError::Transport(other),
        })?;
        if !response.is_success() {
            return Err(FetchError::UnavailableEverywhere {
                url: url.to_string(),
                reason: format!("archive API HTTP {}", response.status),
            });
        }
        let parsed: Availability = serde_json::from_slice(&response.body).map_err(|e| {
            FetchError::UnavailableEverywhere { url: url.to_string(), reason: format!("archive API: {e}") }
        })?;
        Ok(parsed
            .archived_snapshots
            .closest
            .filter(|s| s.available)
            .map(|s| match s.url.strip_prefix("http://web.archive.org/") {
                Some(rest) => format!("https://web.archive.org/{rest}"),
                None => s.url,
            }))
    }

    pub fn fetch_with_archive_fallback(&self, url: &str) -> Result<GroundingDocument, FetchError> {
        let live_failure = match self.fetch_document(url) {
            Err(FetchError::Unavailable { reason, .. }) => reason,
            other => return other,
        };
        log::info!("{url} unavailable ({live_failure}), trying the Web Archive");
        let snapshot = self.archived_snapshot(url)?.ok_or_else(|| FetchError::UnavailableEverywhere {
            url: url.to_string(),
            reason: format!("{live_failure}; no archived snapshot"),
        })?;
        let response = self.get(&snapshot).map_err(|e| match e {
            FetchError::Unavailable { reason, .. } => {
                FetchError::UnavailableEverywhere { url: url.to_string(), reason }
            }
            other => other,
        })?;
        self.build(url, response, RetrievalSource::WebArchive, Some(snapshot)).map(|(doc, _)| doc).map_err(|e| match e {
            FetchError::Unavailable { reason, .. } => FetchError::UnavailableEverywhere { url: url.to_string(), reason },
            other => other,
        })
    }

    /// Fetches `urls` with at most `concurrency` requests in flight. Results
    /// keep the input order.
    pub fn fetch_all(
        &self,
        urls: &[String],
        concurrency: usize,
        with_fallback: bool,
    ) -> Vec<Result<GroundingDocument, FetchError>> {
        let slots: Vec<Mutex<Option<Result<GroundingDocument, FetchError>>>> =
            urls.iter().map(|_| Mutex::new(None)).collect();
        let next = Mutex::new(0usize);
        thread::scope(|scope| {
            for _ in 0..concurrency.max(1).min(urls.len().max(1)) {
                scope.spawn(|| loop {
                    let idx = {
                        let mut n = next.lock().expect("work index lock");
                        let idx = *n;
                        *n += 1;
                        idx
                    };
                    let Some(url) = urls.get(idx) else { break };
                    let result =
                        if with_fallback { self.fetch_with_archive_fallback(url) } else { self.fetch_document(url) };
                    *slots[idx].lock().expect("result slot lock") = Some(result);
                });
            }
        });
        slots.into_iter().map(|s| s.into_inner().expect("result slot lock").expect("every slot filled")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::http::FixtureTransport;

    fn page(body: &str) -> HttpResponse {
        HttpResponse { status: 200, content_type: Some("text/html; charset=utf-8".into()), body: body.into() }
    }

    fn status(code: u16) -> HttpResponse {
        HttpResponse { status: code, content_type: Some("text/html".into()), body: Vec::new() }
    }

    fn fetcher(t: FixtureTransport) -> Fetcher {
        Fetcher::new(Arc::new(t), Arc::new(FixedClock::new(DateTime::UNIX_EPOCH)))
    }

    fn availability(url: &str, snapshot: Option<&str>) -> (HttpRequest, HttpResponse) {
        let body = match snapshot {
            Some(s) => serde_json::json!({"url": url, "archived_snapshots": {"closest": {"available": true, "url": s, "timestamp": "20190501200443", "status": "200"}}}),
            None => serde_json::json!({"url": url, "archived_snapshots": {}}),
        };
        (
            HttpRequest::get(DEFAULT_ARCHIVE_API).query("url", url),
            HttpResponse { status: 200, content_type: Some("application/json".into()), body: body.to_string().into() },
        )
    }

    #[test]
    fn three_paragraphs_in_order() {
        let t = FixtureTransport::new()
            .with(HttpRequest::get("https://ex.org/a"), page("<p>one</p><div><p>two</p></div><p>three</p>"));
        let doc = fetcher(t).fetch_document("https://ex.org/a").unwrap();
        assert_eq!(doc.paragraphs, vec!["one", "two", "three"]);
        assert_eq!(doc.retrieval_source, RetrievalSource::Direct);
        assert_eq!(doc.media_type, "text/html");
    }

    #[test]
    fn pdf_and_errors() {
        let pdf = HttpResponse { status: 200, content_type: Some("application/pdf".into()), body: b"%PDF-1.4".to_vec() };
        let t = FixtureTransport::new()
            .with(HttpRequest::get("https://ex.org/r.pdf"), pdf)
            .with(HttpRequest::get("https://ex.org/gone"), status(404));
        let f = fetcher(t);
        assert!(matches!(f.fetch_document("https://ex.org/r.pdf"), Err(FetchError::UnsupportedMediaType { .. })));
        assert!(matches!(f.fetch_document("https://ex.org/gone"), Err(FetchError::Unavailable { .. })));
        assert!(matches!(f.fetch_document("not a url"), Err(FetchError::InvalidUrl { .. })));
        // a missing recording is not mistaken for a dead link
        assert!(matches!(f.fetch_document("https://ex.org/unrecorded"), Err(FetchError::Transport(_))));
    }

    #[test]
    fn archive_fallback_paths() {
        let snap = "http://web.archive.org/web/20190501200443/https://ex.org/dead";
        let (a_req, a_resp) = availability("https://ex.org/dead", Some(snap));
        let (n_req, n_resp) = availability("https://ex.org/lost", None);
        let archived = "<html><!-- BEGIN WAYBACK TOOLBAR INSERT --><p>toolbar</p><!-- END WAYBACK TOOLBAR INSERT --><p>kept</p></html>";
        let t = FixtureTransport::new()
            .with(HttpRequest::get("https://ex.org/dead"), status(404))
            .with(a_req, a_resp)
            .with(HttpRequest::get("https://web.archive.org/web/20190501200443/https://ex.org/dead"), page(archived))
            .with(HttpRequest::get("https://ex.org/lost"), status(410))
            .with(n_req, n_resp)
            .with(HttpRequest::get("https://ex.org/live"), page("<p>live</p>"));
        let f = fetcher(t);
        let doc = f.fetch_with_archive_fallback("https://ex.org/dead").unwrap();
        assert_eq!(doc.retrieval_source, RetrievalSource::WebArchive);
        assert_eq!(doc.paragraphs, vec!["kept"]);
        assert_eq!(doc.url, "https://ex.org/dead");
        assert!(doc.content_url().starts_with("https://web.archive.org/web/"));
        assert_eq!(f.fetch_with_archive_fallback("https://ex.org/live").unwrap().retrieval_source, RetrievalSource::Direct);
        assert!(matches!(
            f.fetch_with_archive_fallback("https://ex.org/lost"),
            Err(FetchError::UnavailableEverywhere { .. })
        ));
    }

    #[test]
    fn fetch_all_keeps_order() {
        let mut t = FixtureTransport::new();
        let urls: Vec<String> = (0..9).map(|i| format!("https://ex.org/{i}")).collect();
        for (i, u) in urls.iter().enumerate() {
            t.insert(&HttpRequest::get(u), page(&format!("<p>doc {i}</p>")));
        }
        let results = fetcher(t).fetch_all(&urls, 4, false);
        for (i, r) in results.iter().enumerate() {
            assert_eq!(r.as_ref().unwrap().paragraphs, vec![format!("doc {i}")]);
        }
    }
}
