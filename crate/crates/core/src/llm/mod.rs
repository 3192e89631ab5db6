//! Provider-agnostic LLM calls with fixed decoding parameters, plus parsing
//! of raw completions into verdicts, NLI labels and justifications.

pub mod gateway;
pub mod mock;
pub mod parse;
pub mod providers;
pub mod replay;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::http::TransportError;
use crate::prompting::system_prompt;

pub use gateway::{LlmGateway, ResponseLog, ResponseRecord};
pub use mock::MockProvider;
pub use parse::{extract_justification, parse_nli_label, parse_option};
pub use replay::ReplayProvider;

pub const DEFAULT_MODEL: &str = "meta/meta-llama-3-70b-instruct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub model: String,
    pub seed: i64,
    pub top_p: f64,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub min_new_tokens: i32,
    pub system_prompt: String,
}

pub fn default_params() -> LlmParams {
    LlmParams {
        model: DEFAULT_MODEL.to_string(),
        seed: 42,
        top_p: 0.9,
        temperature: 0.1,
        max_new_tokens: 500,
        min_new_tokens: -1,
        system_prompt: system_prompt().to_string(),
    }
}

impl Default for LlmParams {
    fn default() -> Self {
        default_params()
    }
}

impl LlmParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidParams(m.to_string()));
        if self.model.trim().is_empty() {
            return bad("model is empty");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be non-negative");
        }
        if self.max_new_tokens == 0 {
            return bad("max_new_tokens must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub params: LlmParams,
    pub user_prompt: String,
}

impl LlmRequest {
    pub fn new(params: LlmParams, user_prompt: impl Into<String>) -> Self {
        Self { params, user_prompt: user_prompt.into() }
    }

    /// Hex SHA-256 over the canonical JSON of parameters and prompts.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn prompt_sha256(&self) -> String {
        hex::encode(Sha256::digest(self.user_prompt.as_bytes()))
    }

    pub fn char_len(&self) -> usize {
        self.params.system_prompt.chars().count() + self.user_prompt.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw_text: String,
    pub latency_ms: u64,
    pub provider: String,
    pub request_fingerprint: String,
}

/// What a provider hands back. Replay providers report the recorded latency
/// so replays stay byte-stable; live providers leave it to the gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderReply {
    pub text: String,
    pub latency_ms: Option<u64>,
}

impl ProviderReply {
    pub fn measured(text: impl Into<String>) -> Self {
        Self { text: text.into(), latency_ms: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid LLM parameters: {0}")]
    InvalidParams(String),
    #[error("prompt of {chars} characters exceeds the model budget of {budget}")]
    ContextOverflow { chars: usize, budget: usize },
    #[error("LLM provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("no recorded LLM response for request {fingerprint}")]
    FixtureMissing { fingerprint: String },
    #[error("LLM provider misconfigured: {0}")]
    Misconfigured(String),
    #[error("response log: {0}")]
    Log(String),
    #[error(transparent)]
    Transport(TransportError),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::ProviderUnavailable(_))
    }

    /// Errors that abort a run rather than skipping one request.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, LlmError::ProviderUnavailable(_) | LlmError::ContextOverflow { .. } | LlmError::EmptyPrompt)
    }
}

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError>;
}

impl<T: LlmProvider + ?Sized> LlmProvider for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError> {
        (**self).complete(request)
    }
}
