//! HTTP transport abstraction.
//!
//! Every outbound request in the crate goes through a [`Transport`]. Tests and
//! replay runs use [`FixtureTransport`], which serves recorded responses and
//! never touches the network. [`LiveTransport`] is the only implementation
//! that opens sockets; it increments a process-wide counter so that callers
//! can assert a run performed zero live requests.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

static LIVE_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of requests sent by any [`LiveTransport`] in this process.
pub fn live_request_count() -> u64 {
    LIVE_REQUESTS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub query: Vec<(String, String)>,
    /// Headers are sent but never part of the fingerprint: they carry credentials.
    pub headers: Vec<(String, String)>,
    pub body: Option<String>,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>) -> Self {
        Self { method: Method::Get, url: url.into(), query: Vec::new(), headers: Vec::new(), body: None }
    }

    pub fn post(url: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            method: Method::Post,
            url: url.into(),
            query: Vec::new(),
            headers: Vec::new(),
            body: Some(body.into()),
        }
    }

    pub fn query(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.query.push((key.into(), value.into()));
        self
    }

    pub fn header(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((key.into(), value.into()));
        self
    }

    /// The URL with the query string appended and percent-encoded.
    pub fn full_url(&self) -> String {
        if self.query.is_empty() {
            return self.url.clone();
        }
        match url::Url::parse(&self.url) {
            Ok(mut parsed) => {
                parsed.query_pairs_mut().extend_pairs(self.query.iter());
                parsed.to_string()
            }
            Err(_) => {
                let encoded: String = url::form_urlencoded::Serializer::new(String::new())
                    .extend_pairs(self.query.iter())
                    .finish();
                format!("{}?{}", self.url, encoded)
            }
        }
    }

    pub fn descriptor(&self) -> RequestDescriptor {
        RequestDescriptor {
            method: self.method,
            url: self.url.clone(),
            query: self.query.iter().cloned().collect(),
            body: self.body.clone(),
        }
    }

    pub fn fingerprint(&self) -> String {
        self.descriptor().fingerprint()
    }
}

/// The replay-relevant part of a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestDescriptor {
    pub method: Method,
    pub url: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub query: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

impl RequestDescriptor {
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("descriptor serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// The media type without parameters, lowercased.
    pub fn media_type(&self) -> Option<String> {
        self.content_type
            .as_deref()
            .and_then(|ct| ct.split(';').next())
            .map(|mt| mt.trim().to_ascii_lowercase())
            .filter(|mt| !mt.is_empty())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("request to {url} failed: {reason}")]
    Connection { url: String, reason: String },
    #[error("no recorded fixture for request {fingerprint} ({method:?} {url})")]
    FixtureMissing { fingerprint: String, method: Method, url: String },
    #[error("live network access is disabled")]
    NetworkDisabled,
    #[error("fixture store error: {0}")]
    Store(String),
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        (**self).send(request)
    }
}

/// Refuses every request. Installed wherever a live transport would be in
/// replay mode.
#[derive(Debug, Default)]
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn send(&self, _request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        Err(TransportError::NetworkDisabled)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureIndex {
    entries: Vec<FixtureEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureEntry {
    request: RequestDescriptor,
    response: FixtureResponse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureResponse {
    status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    content_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body_file: Option<String>,
}

pub const FIXTURE_INDEX: &str = "fixtures.json";

/// Serves recorded responses keyed by request fingerprint.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    responses: HashMap<String, HttpResponse>,
    served: AtomicU64,
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads `fixtures.json` from `dir`; body files are resolved relative to `dir`.
    pub fn load(dir: &Path) -> Result<Self, TransportError> {
        let index_path = dir.join(FIXTURE_INDEX);
        let raw = fs::read_to_string(&index_path)
            .map_err(|e| TransportError::Store(format!("{}: {e}", index_path.display())))?;
        let index: FixtureIndex = serde_json::from_str(&raw)
            .map_err(|e| TransportError::Store(format!("{}: {e}", index_path.display())))?;
        let mut transport = Self::new();
        for entry in index.entries {
            let body = match (&entry.response.body, &entry.response.body_file) {
                (Some(inline), _) => inline.clone().into_bytes(),
                (None, Some(file)) => fs::read(dir.join(file))
                    .map_err(|e| TransportError::Store(format!("{file}: {e}")))?,
                (None, None) => Vec::new(),
            };
            transport.responses.insert(
                entry.request.fingerprint(),
                HttpResponse { status: entry.response.status, content_type: entry.response.content_type, body },
            );
        }
        Ok(transport)
    }

    pub fn insert(&mut self, request: &HttpRequest, response: HttpResponse) {
        self.responses.insert(request.fingerprint(), response);
    }

    pub fn with(mut self, request: HttpRequest, response: HttpResponse) -> Self {
        self.insert(&request, response);
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn served(&self) -> u64 {
        self.served.load(Ordering::SeqCst)
    }
}

impl Transport for FixtureTransport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let fingerprint = request.fingerprint();
        match self.responses.get(&fingerprint) {
            Some(response) => {
                self.served.fetch_add(1, Ordering::SeqCst);
                Ok(response.clone())
            }
            None => Err(TransportError::FixtureMissing {
                fingerprint,
                method: request.method,
                url: request.full_url(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub connect_timeout: Duration,
    pub total_timeout: Duration,
    pub retries: u32,
    pub retry_backoff: Duration,
    pub user_agent: String,
    pub max_body_bytes: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            connect_timeout: Duration::from_secs(15),
            total_timeout: Duration::from_secs(30),
            retries: 2,
            retry_backoff: Duration::from_millis(500),
            user_agent: concat!("kgtrace/", env!("CARGO_PKG_VERSION"), " (statement verification)").to_string(),
            max_body_bytes: 20 * 1024 * 1024,
        }
    }
}

/// Blocking HTTP client. Retries connection failures and 5xx responses.
pub struct LiveTransport {
    agent: ureq::Agent,
    config: LiveConfig,
}

impl LiveTransport {
    pub fn new(config: LiveConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_connect(Some(config.connect_timeout))
            .timeout_global(Some(config.total_timeout))
            .http_status_as_error(false)
            .user_agent(config.user_agent.as_str())
            .build()
            .into();
        Self { agent, config }
    }

    fn send_once(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        LIVE_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let url = request.full_url();
        let result = match request.method {
            Method::Get => {
                let mut builder = self.agent.get(&url);
                for (k, v) in &request.headers {
                    builder = builder.header(k.as_str(), v.as_str());
                }
                builder.call()
            }
            Method::Post => {
                let mut builder = self.agent.post(&url);
                for (k, v) in &request.headers {
                    builder = builder.header(k.as_str(), v.as_str());
                }
                builder.send(request.body.clone().unwrap_or_default())
            }
        };
        let mut response = result.map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout { url: url.clone() },
            other => TransportError::Connection { url: url.clone(), reason: other.to_string() },
        })?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let mut body = Vec::new();
        response
            .body_mut()
            .as_reader()
            .take(self.config.max_body_bytes)
            .read_to_end(&mut body)
            .map_err(|e| TransportError::Connection { url: url.clone(), reason: e.to_string() })?;
        Ok(HttpResponse { status, content_type, body })
    }
}

impl Transport for LiveTransport {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut attempt = 0;
        loop {
            let outcome = self.send_once(request);
            let retryable = match &outcome {
                Ok(resp) => resp.status >= 500,
                Err(TransportError::Timeout { .. } | TransportError::Connection { .. }) => true,
                Err(_) => false,
            };
            if !retryable || attempt >= self.config.retries {
                return outcome;
            }
            attempt += 1;
            log::debug!("retrying {} (attempt {})", request.url, attempt + 1);
            std::thread::sleep(self.config.retry_backoff * 2u32.pow(attempt - 1));
        }
    }
}

/// Caps the number of in-flight requests through the wrapped transport.
pub struct LimitedTransport<T> {
    inner: T,
    limit: usize,
    in_flight: Mutex<usize>,
    available: Condvar,
}

impl<T: Transport> LimitedTransport<T> {
    pub fn new(inner: T, limit: usize) -> Self {
        Self { inner, limit: limit.max(1), in_flight: Mutex::new(0), available: Condvar::new() }
    }
}

impl<T: Transport> Transport for LimitedTransport<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        {
            let mut count = self.in_flight.lock().expect("limiter lock poisoned");
            while *count >= self.limit {
                count = self.available.wait(count).expect("limiter lock poisoned");
            }
            *count += 1;
        }
        let result = self.inner.send(request);
        *self.in_flight.lock().expect("limiter lock poisoned") -= 1;
        self.available.notify_one();
        result
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheMeta {
    url: String,
    status: u16,
    content_type: Option<String>,
    stored_at: u64,
}

/// On-disk cache of successful responses, keyed by request fingerprint.
/// Entries are written to a temporary file and renamed into place, so
/// concurrent writers never expose partial entries.
pub struct CachingTransport<T> {
    inner: T,
    dir: PathBuf,
    ttl: Duration,
    tmp_counter: AtomicU64,
}

impl<T: Transport> CachingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>, ttl: Duration) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { inner, dir, ttl, tmp_counter: AtomicU64::new(0) })
    }

    fn lookup(&self, key: &str) -> Option<HttpResponse> {
        let meta: CacheMeta = serde_json::from_slice(&fs::read(self.dir.join(format!("{key}.json"))).ok()?).ok()?;
        let age = now_secs().saturating_sub(meta.stored_at);
        if age >= self.ttl.as_secs() {
            return None;
        }
        let body = fs::read(self.dir.join(format!("{key}.bin"))).ok()?;
        Some(HttpResponse { status: meta.status, content_type: meta.content_type, body })
    }

    fn store(&self, key: &str, url: &str, response: &HttpResponse) -> std::io::Result<()> {
        let meta = CacheMeta {
            url: url.to_string(),
            status: response.status,
            content_type: response.content_type.clone(),
            stored_at: now_secs(),
        };
        self.write_atomic(&format!("{key}.bin"), &response.body)?;
        self.write_atomic(&format!("{key}.json"), &serde_json::to_vec_pretty(&meta)?)
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let n = self.tmp_counter.fetch_add(1, Ordering::SeqCst);
        let tmp = self.dir.join(format!(".{name}.{}.{n}.tmp", std::process::id()));
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, self.dir.join(name))
    }
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl<T: Transport> Transport for CachingTransport<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let key = request.fingerprint();
        if let Some(hit) = self.lookup(&key) {
            return Ok(hit);
        }
        let response = self.inner.send(request)?;
        if response.is_success() {
            if let Err(e) = self.store(&key, &request.url, &response) {
                log::warn!("cache write failed for {}: {e}", request.url);
            }
        }
        Ok(response)
    }
}

/// Writes every exchange through the wrapped transport into a fixture
/// directory loadable by [`FixtureTransport::load`].
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
    index: Mutex<FixtureIndex>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Result<Self, TransportError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| TransportError::Store(e.to_string()))?;
        let index_path = dir.join(FIXTURE_INDEX);
        let index = match fs::read_to_string(&index_path) {
            Ok(raw) => serde_json::from_str(&raw).map_err(|e| TransportError::Store(e.to_string()))?,
            Err(_) => FixtureIndex { entries: Vec::new() },
        };
        Ok(Self { inner, dir, index: Mutex::new(index) })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let response = self.inner.send(request)?;
        let descriptor = request.descriptor();
        let fingerprint = descriptor.fingerprint();
        let body_file = format!("{}.body", &fingerprint[..16]);
        let store = |e: std::io::Error| TransportError::Store(e.to_string());
        fs::write(self.dir.join(&body_file), &response.body).map_err(store)?;
        let mut index = self.index.lock().expect("recording lock poisoned");
        index.entries.retain(|e| e.request.fingerprint() != fingerprint);
        index.entries.push(FixtureEntry {
            request: descriptor,
            response: FixtureResponse {
                status: response.status,
                content_type: response.content_type.clone(),
                body: None,
                body_file: Some(body_file),
            },
        });
        let serialized = serde_json::to_vec_pretty(&*index).map_err(|e| TransportError::Store(e.to_string()))?;
        fs::write(self.dir.join(FIXTURE_INDEX), serialized).map_err(store)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(body: &str) -> HttpResponse {
        HttpResponse { status: 200, content_type: Some("text/plain".into()), body: body.as_bytes().to_vec() }
    }

    #[test]
    fn fingerprint_ignores_headers_and_query_order() {
        let a = HttpRequest::get("https://x.test/a").query("b", "2").query("a", "1").header("Authorization", "t1");
        let b = HttpRequest::get("https://x.test/a").query("a", "1").query("b", "2").header("Authorization", "t2");
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = HttpRequest::get("https://x.test/a").query("a", "1");
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn full_url_encodes_query() {
        let r = HttpRequest::get("https://x.test/sparql").query("query", "SELECT ?x { }");
        assert_eq!(r.full_url(), "https://x.test/sparql?query=SELECT+%3Fx+%7B+%7D");
    }

    #[test]
    fn fixture_transport_serves_and_reports_missing() {
        let req = HttpRequest::get("https://x.test/");
        let t = FixtureTransport::new().with(req.clone(), ok("hi"));
        assert_eq!(t.send(&req).unwrap().text(), "hi");
        assert_eq!(t.served(), 1);
        let missing = HttpRequest::get("https://x.test/other");
        match t.send(&missing) {
            Err(TransportError::FixtureMissing { fingerprint, .. }) => assert_eq!(fingerprint, missing.fingerprint()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixture_directory_loads_inline_and_file_bodies() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("page.html"), "<p>hello</p>").unwrap();
        let index = serde_json::json!({
            "entries": [
                {"request": {"method": "GET", "url": "https://a.test/"},
                 "response": {"status": 200, "content_type": "text/html", "body_file": "page.html"}},
                {"request": {"method": "GET", "url": "https://a.test/q", "query": {"x": "1"}},
                 "response": {"status": 404, "body": "nope"}}
            ]
        });
        fs::write(dir.path().join(FIXTURE_INDEX), index.to_string()).unwrap();
        let t = FixtureTransport::load(dir.path()).unwrap();
        assert_eq!(t.send(&HttpRequest::get("https://a.test/")).unwrap().text(), "<p>hello</p>");
        assert_eq!(t.send(&HttpRequest::get("https://a.test/q").query("x", "1")).unwrap().status, 404);
    }

    #[test]
    fn recording_round_trips_through_fixture_loader() {
        let dir = tempfile::tempdir().unwrap();
        let req = HttpRequest::get("https://r.test/").query("q", "v");
        let source = FixtureTransport::new().with(req.clone(), ok("recorded"));
        let recorder = RecordingTransport::new(source, dir.path()).unwrap();
        recorder.send(&req).unwrap();
        let replay = FixtureTransport::load(dir.path()).unwrap();
        assert_eq!(replay.send(&req).unwrap().text(), "recorded");
    }

    #[test]
    fn cache_serves_second_request_without_inner_call() {
        let dir = tempfile::tempdir().unwrap();
        let req = HttpRequest::get("https://c.test/");
        let inner = Arc::new(FixtureTransport::new().with(req.clone(), ok("cached")));
        let cache = CachingTransport::new(inner.clone(), dir.path(), Duration::from_secs(3600)).unwrap();
        assert_eq!(cache.send(&req).unwrap().text(), "cached");
        assert_eq!(cache.send(&req).unwrap().text(), "cached");
        assert_eq!(inner.served(), 1);

        let expired = CachingTransport::new(inner.clone(), dir.path(), Duration::ZERO).unwrap();
        expired.send(&req).unwrap();
        assert_eq!(inner.served(), 2);
    }

    #[test]
    fn limiter_bounds_concurrency() {
        struct Probe {
            current: AtomicU64,
            peak: AtomicU64,
        }
        impl Transport for Probe {
            fn send(&self, _r: &HttpRequest) -> Result<HttpResponse, TransportError> {
                let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(20));
                self.current.fetch_sub(1, Ordering::SeqCst);
                Ok(HttpResponse { status: 200, content_type: None, body: Vec::new() })
            }
        }
        let probe = Arc::new(Probe { current: AtomicU64::new(0), peak: AtomicU64::new(0) });
        let limited = LimitedTransport::new(probe.clone(), 2);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| limited.send(&HttpRequest::get("https://l.test/")).unwrap());
            }
        });
        assert!(probe.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn offline_transport_refuses() {
        assert_eq!(OfflineTransport.send(&HttpRequest::get("https://o.test/")), Err(TransportError::NetworkDisabled));
    }
}
