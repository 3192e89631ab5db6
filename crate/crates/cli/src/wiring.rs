//! Construction of transports, providers and clocks for live, recording and
//! replay runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use kgtrace::clock::{Clock, FixedClock, SystemClock};
use kgtrace::http::{
    CachingTransport, FixtureTransport, LiveConfig, LiveTransport, RecordingTransport, Transport, FIXTURE_INDEX,
};
use kgtrace::llm::providers::{OpenAiProvider, ReplicateProvider};
use kgtrace::llm::{LlmGateway, LlmProvider, MockProvider, ReplayProvider, ResponseLog};
use kgtrace::retrieval::fetch::{Fetcher, DEFAULT_FETCH_CONCURRENCY};
use kgtrace::retrieval::search::{
    FixtureSearchProvider, GoogleSearchProvider, RecordedHit, SearchError, SearchFixtures, SearchProvider,
    SEARCH_FIXTURE_FILE,
};
use kgtrace::verifier::{Verifier, VerifierConfig};
use kgtrace::wikidata::WikidataClient;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{LlmProviderKind, RunConfig};
use crate::exit::CliError;

pub const LLM_REPLAY_FILE: &str = "llm-responses.jsonl";
pub const LLM_MOCK_FILE: &str = "llm-mock.jsonl";
pub const REPLAY_SETTINGS_FILE: &str = "replay.json";
const HTTP_CACHE_TTL: Duration = Duration::from_secs(7 * 24 * 3600);

/// Clock settings of a replay directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplaySettings {
    pub started_at: DateTime<Utc>,
    #[serde(default)]
    pub step_ms: i64,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        Self { started_at: DateTime::<Utc>::UNIX_EPOCH, step_ms: 0 }
    }
}

/// Content hashes of every file in a fixture directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixtureIdentity {
    pub dir: PathBuf,
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn fixture_identity(dir: &Path) -> Result<FixtureIdentity, CliError> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = fs::read_dir(&current).map_err(|e| CliError::io(current.display(), e))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(current.display(), e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                files.insert(name, sha256_file(&path)?);
            }
        }
    }
    Ok(FixtureIdentity { dir: dir.to_path_buf(), files })
}

/// Services shared by the subcommands of one run.
pub struct Context {
    pub config: RunConfig,
    pub clock: Arc<dyn Clock>,
    pub transport: Arc<dyn Transport>,
    pub stop: Arc<AtomicBool>,
    pub fixtures: Option<FixtureIdentity>,
    fixture_transport: Option<Arc<FixtureTransport>>,
}

impl Context {
    pub fn new(config: RunConfig, stop: Arc<AtomicBool>) -> Result<Self, CliError> {
        let (clock, transport, fixtures, fixture_transport): (Arc<dyn Clock>, Arc<dyn Transport>, _, _) =
            match &config.replay {
                Some(dir) => {
                    if !dir.is_dir() {
                        return Err(CliError::Config(format!("replay directory {} does not exist", dir.display())));
                    }
                    let settings = read_replay_settings(dir)?;
                    let clock = FixedClock::stepping(settings.started_at, chrono::Duration::milliseconds(settings.step_ms));
                    let fixture = Arc::new(if dir.join(FIXTURE_INDEX).exists() {
                        FixtureTransport::load(dir)?
                    } else {
                        FixtureTransport::new()
                    });
                    (Arc::new(clock), fixture.clone(), Some(fixture_identity(dir)?), Some(fixture))
                }
                None => {
                    let live: Arc<dyn Transport> = Arc::new(LiveTransport::new(LiveConfig::default()));
                    let cached: Arc<dyn Transport> = match &config.cache_dir {
                        Some(dir) => Arc::new(
                            CachingTransport::new(live, dir, HTTP_CACHE_TTL).map_err(|e| CliError::io(dir.display(), e))?,
                        ),
                        None => live,
                    };
                    let transport: Arc<dyn Transport> = match &config.record {
                        Some(dir) => Arc::new(RecordingTransport::new(cached, dir)?),
                        None => cached,
                    };
                    (Arc::new(SystemClock), transport, None, None)
                }
            };
        Ok(Self { config, clock, transport, stop, fixtures, fixture_transport })
    }

    /// Requests answered from fixtures so far, zero outside replay mode.
    pub fn fixtures_served(&self) -> u64 {
        self.fixture_transport.as_ref().map_or(0, |t| t.served())
    }

    pub fn wikidata(&self) -> Arc<WikidataClient> {
        Arc::new(WikidataClient::with_endpoints(
            self.transport.clone(),
            &self.config.endpoints.sparql,
            &self.config.endpoints.wikidata_api,
            kgtrace::wikidata::DEFAULT_MAX_IN_FLIGHT,
        ))
    }

    fn llm_provider(&self) -> Result<Arc<dyn LlmProvider>, CliError> {
        if let Some(dir) = &self.config.replay {
            let recorded = dir.join(LLM_REPLAY_FILE);
            let scripted = dir.join(LLM_MOCK_FILE);
            return if recorded.exists() {
                Ok(Arc::new(ReplayProvider::load(&recorded)?))
            } else if scripted.exists() {
                Ok(Arc::new(MockProvider::load(&scripted)?))
            } else {
                Err(CliError::Config(format!(
                    "replay directory {} has neither {LLM_REPLAY_FILE} nor {LLM_MOCK_FILE}",
                    dir.display()
                )))
            };
        }
        let live: Arc<dyn Transport> = Arc::new(LiveTransport::new(LiveConfig {
            total_timeout: Duration::from_secs(180),
            ..LiveConfig::default()
        }));
        Ok(match self.config.llm_provider {
            LlmProviderKind::Replicate => Arc::new(ReplicateProvider::from_env(live)?),
            LlmProviderKind::Openai => Arc::new(OpenAiProvider::from_env(live, self.config.llm_base_url.clone())?),
        })
    }

    /// The LLM gateway. Outside replay mode every completion is appended to a
    /// response log that a later replay run can consume.
    pub fn gateway(&self) -> Result<Arc<LlmGateway>, CliError> {
        let mut gateway = LlmGateway::new(self.llm_provider()?)
            .with_context_tokens(self.config.context_tokens)
            .with_max_in_flight(self.config.llm_in_flight)
            .with_clock(self.clock.clone());
        if !self.config.is_replay() {
            let dir = self.config.record.clone().unwrap_or_else(|| self.config.out.clone());
            fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
            gateway = gateway.with_log(Arc::new(ResponseLog::open(dir.join(LLM_REPLAY_FILE))?));
        }
        Ok(Arc::new(gateway))
    }

    pub fn search(&self) -> Result<Arc<dyn SearchProvider>, CliError> {
        if let Some(dir) = &self.config.replay {
            let path = dir.join(SEARCH_FIXTURE_FILE);
            return Ok(Arc::new(if path.exists() {
                FixtureSearchProvider::load(&path)?
            } else {
                FixtureSearchProvider::default()
            }));
        }
        let google: Arc<dyn SearchProvider> = Arc::new(GoogleSearchProvider::from_env(self.transport.clone())?);
        Ok(match &self.config.record {
            Some(dir) => Arc::new(RecordingSearch { inner: google, path: dir.join(SEARCH_FIXTURE_FILE), log: Mutex::default() }),
            None => google,
        })
    }

    pub fn fetcher(&self) -> Arc<Fetcher> {
        Arc::new(Fetcher::new(self.transport.clone(), self.clock.clone()).with_archive_api(&self.config.endpoints.archive_api))
    }

    pub fn verifier(&self, with_search: bool) -> Result<Verifier, CliError> {
        let mut verifier = Verifier::new(self.gateway()?, self.fetcher(), self.config.llm.clone(), self.clock.clone())
            .with_config(VerifierConfig {
                hit_limit: self.config.hit_limit,
                fetch_concurrency: if self.config.is_replay() { 1 } else { DEFAULT_FETCH_CONCURRENCY },
                ..VerifierConfig::default()
            })
            .with_wikidata(self.wikidata())
            .with_stop_flag(self.stop.clone());
        if with_search {
            verifier = verifier.with_search(self.search()?, kgtrace::retry::RetryPolicy::default());
        }
        Ok(verifier)
    }
}

fn read_replay_settings(dir: &Path) -> Result<ReplaySettings, CliError> {
    let path = dir.join(REPLAY_SETTINGS_FILE);
    if !path.exists() {
        return Ok(ReplaySettings::default());
    }
    let raw = fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Passes searches through and keeps their results in a fixture file.
struct RecordingSearch {
    inner: Arc<dyn SearchProvider>,
    path: PathBuf,
    log: Mutex<SearchFixtures>,
}

impl SearchProvider for RecordingSearch {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<(String, Option<String>)>, SearchError> {
        let hits = self.inner.search(query, limit)?;
        let mut log = self.log.lock().expect("search log lock");
        log.queries.insert(
            query.to_string(),
            hits.iter().map(|(url, title)| RecordedHit { url: url.clone(), title: title.clone() }).collect(),
        );
        let json = serde_json::to_string_pretty(&*log).map_err(|e| SearchError::Misconfigured(e.to_string()))?;
        fs::write(&self.path, json).map_err(|e| SearchError::Misconfigured(format!("{}: {e}", self.path.display())))?;
        Ok(hits)
    }
}
