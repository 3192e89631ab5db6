//! Library-level wiring of the bundled replay fixtures.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use kgtrace::clock::{Clock, FixedClock};
use kgtrace::http::FixtureTransport;
use kgtrace::llm::{default_params, LlmGateway, LlmParams, MockProvider};
use kgtrace::retrieval::search::{FixtureSearchProvider, SEARCH_FIXTURE_FILE};
use kgtrace::retrieval::Fetcher;
use kgtrace::retry::RetryPolicy;
use kgtrace::verifier::Verifier;
use kgtrace::wikidata::WikidataClient;
use serde::Deserialize;

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[derive(Deserialize)]
struct Settings {
    started_at: DateTime<Utc>,
    step_ms: i64,
}

pub struct Replay {
    pub clock: Arc<dyn Clock>,
    pub started: DateTime<Utc>,
    pub wikidata: Arc<WikidataClient>,
    pub verifier: Verifier,
    pub params: LlmParams,
}

pub fn replay(name: &str, model: &str) -> Replay {
    let dir = fixture_dir(name);
    let settings: Settings =
        serde_json::from_str(&std::fs::read_to_string(dir.join("replay.json")).unwrap()).unwrap();
    let clock: Arc<dyn Clock> =
        Arc::new(FixedClock::stepping(settings.started_at, Duration::milliseconds(settings.step_ms)));
    let started = clock.now();
    let transport = Arc::new(FixtureTransport::load(&dir).unwrap());
    let wikidata = Arc::new(WikidataClient::new(transport.clone()));
    let provider = Arc::new(MockProvider::load(&dir.join("llm-mock.jsonl")).unwrap());
    let gateway = Arc::new(LlmGateway::new(provider).with_retry(RetryPolicy::immediate(1)).with_clock(clock.clone()));
    let fetcher = Arc::new(Fetcher::new(transport, clock.clone()));
    let params = LlmParams { model: model.to_string(), ..default_params() };
    let mut verifier = Verifier::new(gateway, fetcher, params.clone(), clock.clone()).with_wikidata(wikidata.clone());
    let search = dir.join(SEARCH_FIXTURE_FILE);
    if search.exists() {
        verifier = verifier.with_search(Arc::new(FixtureSearchProvider::load(&search).unwrap()), RetryPolicy::immediate(1));
    }
    Replay { clock, started, wikidata, verifier, params }
}
