use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::gateway::ResponseRecord;
use super::{LlmError, LlmProvider, LlmRequest, ProviderReply};

/// Answers requests from a recorded response log, matching by fingerprint.
/// When a fingerprint was recorded more than once the last record wins.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    records: HashMap<String, (String, u64)>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let raw = fs::read_to_string(path).map_err(|e| LlmError::Misconfigured(format!("{}: {e}", path.display())))?;
        let mut records = HashMap::new();
        for (n, line) in raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: ResponseRecord = serde_json::from_str(line)
                .map_err(|e| LlmError::Misconfigured(format!("{}:{}: {e}", path.display(), n + 1)))?;
            records.insert(record.fingerprint, (record.raw_text, record.latency_ms));
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl LlmProvider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError> {
        let fingerprint = request.fingerprint();
        self.records
            .get(&fingerprint)
            .map(|(text, latency)| ProviderReply { text: text.clone(), latency_ms: Some(*latency) })
            .ok_or(LlmError::FixtureMissing { fingerprint })
    }
}
