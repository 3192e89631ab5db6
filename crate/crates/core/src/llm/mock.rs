use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{LlmError, LlmProvider, LlmRequest, ProviderReply};

/// One line of a mock script file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    /// Substrings that must all occur in the user prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<Vec<String>>,
    pub response: String,
}

#[derive(Debug, Clone)]
struct Rule {
    contains: Vec<String>,
    response: String,
}

/// Deterministic scripted provider. A request is answered by, in order:
/// an exact fingerprint match, the first content rule whose substrings all
/// occur in the prompt, or the next entry of the ordered script.
#[derive(Debug, Default)]
pub struct MockProvider {
    by_fingerprint: HashMap<String, String>,
    rules: Vec<Rule>,
    script: Mutex<VecDeque<String>>,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scripted<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        let p = Self::new();
        p.script.lock().expect("script lock").extend(responses.into_iter().map(Into::into));
        p
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>, response: impl Into<String>) -> Self {
        self.by_fingerprint.insert(fingerprint.into(), response.into());
        self
    }

    pub fn with_rule<S: Into<String>>(mut self, contains: impl IntoIterator<Item = S>, response: impl Into<String>) -> Self {
        self.rules.push(Rule { contains: contains.into_iter().map(Into::into).collect(), response: response.into() });
        self
    }

    pub fn from_entries(entries: impl IntoIterator<Item = MockEntry>) -> Self {
        let mut p = Self::new();
        for entry in entries {
            match (entry.fingerprint, entry.contains) {
                (Some(fp), _) => {
                    p.by_fingerprint.insert(fp, entry.response);
                }
                (None, Some(contains)) => p.rules.push(Rule { contains, response: entry.response }),
                (None, None) => p.script.get_mut().expect("script lock").push_back(entry.response),
            }
        }
        p
    }

    /// Reads a JSON-lines script; blank lines are ignored.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let raw = fs::read_to_string(path).map_err(|e| LlmError::Misconfigured(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (n, line) in raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let entry = serde_json::from_str(line)
                .map_err(|e| LlmError::Misconfigured(format!("{}:{}: {e}", path.display(), n + 1)))?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log lock").clone()
    }
}

impl LlmProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts.lock().expect("prompt log lock").push(request.user_prompt.clone());
        let fingerprint = request.fingerprint();
        let text = self
            .by_fingerprint
            .get(&fingerprint)
            .cloned()
            .or_else(|| {
                self.rules
                    .iter()
                    .find(|r| r.contains.iter().all(|c| request.user_prompt.contains(c.as_str())))
                    .map(|r| r.response.clone())
            })
            .or_else(|| self.script.lock().expect("script lock").pop_front())
            .ok_or(LlmError::FixtureMissing { fingerprint })?;
        Ok(ProviderReply { text, latency_ms: Some(0) })
    }
}
