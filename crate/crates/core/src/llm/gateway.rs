use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{LlmError, LlmParams, LlmProvider, LlmRequest, LlmResponse};
use crate::clock::{Clock, SystemClock};
use crate::retry::RetryPolicy;

pub const DEFAULT_CONTEXT_TOKENS: usize = 8192;
pub const CHARS_PER_TOKEN: usize = 4;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub fingerprint: String,
    pub provider: String,
    pub params: LlmParams,
    pub prompt_sha256: String,
    pub raw_text: String,
    pub latency_ms: u64,
    pub timestamp: DateTime<Utc>,
}

/// Append-only JSON-lines log of completions. Each record is written with a
/// single write call under a lock and flushed.
pub struct ResponseLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl ResponseLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| LlmError::Log(format!("{}: {e}", parent.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::Log(format!("{}: {e}", path.display())))?;
        Ok(Self { path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &ResponseRecord) -> Result<(), LlmError> {
        let mut line = serde_json::to_string(record).map_err(|e| LlmError::Log(e.to_string()))?;
        line.push('\n');
        let mut file = self.file.lock().expect("response log lock poisoned");
        file.write_all(line.as_bytes()).and_then(|_| file.flush()).map_err(|e| LlmError::Log(e.to_string()))
    }
}

struct Semaphore {
    limit: usize,
    in_use: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(limit: usize) -> Self {
        Self { limit: limit.max(1), in_use: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_use.lock().expect("semaphore lock poisoned");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("semaphore lock poisoned");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_use.lock().expect("semaphore lock poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable entry point for completions: validates requests, enforces the
/// context budget, retries transient failures and records every response.
pub struct LlmGateway {
    provider: Arc<dyn LlmProvider>,
    retry: RetryPolicy,
    context_chars: usize,
    log: Option<Arc<ResponseLog>>,
    clock: Arc<dyn Clock>,
    permits: Semaphore,
}

impl LlmGateway {
    pub fn new(provider: Arc<dyn LlmProvider>) -> Self {
        Self {
            provider,
            retry: RetryPolicy::default(),
            context_chars: DEFAULT_CONTEXT_TOKENS * CHARS_PER_TOKEN,
            log: None,
            clock: Arc::new(SystemClock),
            permits: Semaphore::new(DEFAULT_MAX_IN_FLIGHT),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_context_tokens(mut self, tokens: usize) -> Self {
        self.context_chars = tokens * CHARS_PER_TOKEN;
        self
    }

    pub fn with_log(mut self, log: Arc<ResponseLog>) -> Self {
        self.log = Some(log);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.permits = Semaphore::new(limit);
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn context_chars(&self) -> usize {
        self.context_chars
    }

    pub fn complete(&self, params: &LlmParams, user_prompt: &str) -> Result<LlmResponse, LlmError> {
        if user_prompt.trim().is_empty() {
            return Err(LlmError::EmptyPrompt);
        }
        params.validate()?;
        let request = LlmRequest::new(params.clone(), user_prompt);
        let chars = request.char_len();
        if chars > self.context_chars {
            return Err(LlmError::ContextOverflow { chars, budget: self.context_chars });
        }
        let fingerprint = request.fingerprint();
        let _permit = self.permits.acquire();
        let started = Instant::now();
        let reply = self.retry.run(LlmError::is_retryable, |attempt| {
            if attempt > 1 {
                log::warn!("retrying LLM request {fingerprint} (attempt {attempt})");
            }
            self.provider.complete(&request)
        })?;
        let latency_ms = reply.latency_ms.unwrap_or_else(|| started.elapsed().as_millis() as u64);
        if let Some(log) = &self.log {
            log.append(&ResponseRecord {
                fingerprint: fingerprint.clone(),
                provider: self.provider.name().to_string(),
                params: params.clone(),
                prompt_sha256: request.prompt_sha256(),
                raw_text: reply.text.clone(),
                latency_ms,
                timestamp: self.clock.now(),
            })?;
        }
        Ok(LlmResponse {
            raw_text: reply.text,
            latency_ms,
            provider: self.provider.name().to_string(),
            request_fingerprint: fingerprint,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{default_params, MockProvider, ProviderReply, ReplayProvider};
    use std::sync::atomic::{AtomicU32, Ordering};

    const PRESS_RELEASE_ANSWER: &str = "The correct answer is: a) The RDF statement can be directly verified from the snippet. The snippet contains direct proof. The snippet explicitly mentions \\\"Previous winners of the award... include former Czech president, Václav Havel\\\", which directly verifies the RDF statement [\\\"Václav Havel\\\" - \\\"award received\\\" - \\\"Gottlieb Duttweiler Prize\\\"].";

    #[test]
    fn scripted_text_comes_back_verbatim() {
        let gw = LlmGateway::new(Arc::new(MockProvider::scripted([PRESS_RELEASE_ANSWER])));
        let r = gw.complete(&default_params(), "prompt").unwrap();
        assert_eq!(r.raw_text, PRESS_RELEASE_ANSWER);
        assert_eq!(r.provider, "mock");
        assert_eq!(r.request_fingerprint, LlmRequest::new(default_params(), "prompt").fingerprint());
    }

    #[test]
    fn precondition_errors() {
        let gw = LlmGateway::new(Arc::new(MockProvider::new())).with_context_tokens(100);
        assert_eq!(gw.complete(&default_params(), "   "), Err(LlmError::EmptyPrompt));
        let system = default_params().system_prompt.chars().count();
        let budget = 400;
        let fits = "x".repeat(budget - system);
        let over = "x".repeat(budget - system + 1);
        assert!(matches!(gw.complete(&default_params(), &fits), Err(LlmError::FixtureMissing { .. })));
        assert_eq!(
            gw.complete(&default_params(), &over),
            Err(LlmError::ContextOverflow { chars: budget + 1, budget })
        );
    }

    struct Failing(AtomicU32);
    impl LlmProvider for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn complete(&self, _: &LlmRequest) -> Result<ProviderReply, LlmError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(LlmError::ProviderUnavailable("503".into()))
        }
    }

    #[test]
    fn retries_three_times() {
        let p = Arc::new(Failing(AtomicU32::new(0)));
        let gw = LlmGateway::new(p.clone()).with_retry(RetryPolicy::immediate(3));
        assert!(matches!(gw.complete(&default_params(), "p"), Err(LlmError::ProviderUnavailable(_))));
        assert_eq!(p.0.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let log = Arc::new(ResponseLog::open(dir.path().join("llm-responses.jsonl")).unwrap());
        let gw = LlmGateway::new(Arc::new(MockProvider::scripted(["a) yes", "c) no"]))).with_log(log.clone());
        gw.complete(&default_params(), "first").unwrap();
        gw.complete(&default_params(), "second").unwrap();
        let replay = LlmGateway::new(Arc::new(ReplayProvider::load(log.path()).unwrap()));
        assert_eq!(replay.complete(&default_params(), "second").unwrap().raw_text, "c) no");
        assert_eq!(replay.complete(&default_params(), "first").unwrap().raw_text, "a) yes");
        assert!(matches!(replay.complete(&default_params(), "third"), Err(LlmError::FixtureMissing { .. })));
    }
}
