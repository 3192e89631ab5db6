//! HTTP-backed providers. Credentials travel in headers, which are excluded
//! from request fingerprints.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::{LlmError, LlmProvider, LlmRequest, ProviderReply};
use crate::http::{HttpRequest, HttpResponse, Transport, TransportError};

pub const REPLICATE_TOKEN_ENV: &str = "REPLICATE_API_TOKEN";
pub const OPENAI_KEY_ENV: &str = "OPENAI_API_KEY";
pub const REPLICATE_API: &str = "https://api.replicate.com/v1";
pub const OPENAI_API: &str = "https://api.openai.com/v1";

fn map_transport(e: TransportError) -> LlmError {
    match e {
        TransportError::Timeout { .. } | TransportError::Connection { .. } => LlmError::ProviderUnavailable(e.to_string()),
        other => LlmError::Transport(other),
    }
}

fn check_status(response: &HttpResponse) -> Result<Value, LlmError> {
    let body = response.text();
    match response.status {
        200..=299 => serde_json::from_str(&body).map_err(|e| LlmError::ProviderUnavailable(format!("bad JSON: {e}"))),
        401 | 403 => Err(LlmError::Misconfigured(format!("HTTP {}: credentials rejected", response.status))),
        429 => Err(LlmError::ProviderUnavailable("HTTP 429".into())),
        s if s >= 500 => Err(LlmError::ProviderUnavailable(format!("HTTP {s}"))),
        s => Err(LlmError::Misconfigured(format!("HTTP {s}: {}", body.chars().take(200).collect::<String>()))),
    }
}

fn env_secret(name: &str) -> Result<String, LlmError> {
    std::env::var(name)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| LlmError::Misconfigured(format!("{name} not set")))
}

/// Replicate prediction API for hosted models such as the Llama 3 family.
pub struct ReplicateProvider {
    transport: Arc<dyn Transport>,
    token: String,
    base: String,
    poll_interval: Duration,
    max_polls: u32,
}

impl ReplicateProvider {
    pub fn new(transport: Arc<dyn Transport>, token: impl Into<String>) -> Self {
        Self {
            transport,
            token: token.into(),
            base: REPLICATE_API.into(),
            poll_interval: Duration::from_secs(1),
            max_polls: 120,
        }
    }

    pub fn from_env(transport: Arc<dyn Transport>) -> Result<Self, LlmError> {
        Ok(Self::new(transport, env_secret(REPLICATE_TOKEN_ENV)?))
    }

    pub fn prediction_request(&self, request: &LlmRequest) -> HttpRequest {
        let p = &request.params;
        let body = json!({
            "input": {
                "prompt": request.user_prompt,
                "system_prompt": p.system_prompt,
                "seed": p.seed,
                "top_p": p.top_p,
                "temperature": p.temperature,
                "max_new_tokens": p.max_new_tokens,
                "min_new_tokens": p.min_new_tokens,
            }
        });
        HttpRequest::post(format!("{}/models/{}/predictions", self.base, p.model), body.to_string())
            .header("Authorization", format!("Bearer {}", self.token))
            .header("Content-Type", "application/json")
            .header("Prefer", "wait")
    }

    fn output_text(prediction: &Value) -> Option<String> {
        match prediction.get("output")? {
            Value::String(s) => Some(s.clone()),
            Value::Array(parts) => Some(parts.iter().filter_map(Value::as_str).collect()),
            _ => None,
        }
    }
}

impl LlmProvider for ReplicateProvider {
    fn name(&self) -> &str {
        "replicate"
    }

    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError> {
        let response = self.transport.send(&self.prediction_request(request)).map_err(map_transport)?;
        let mut prediction = check_status(&response)?;
        for _ in 0..self.max_polls {
            match prediction.get("status").and_then(Value::as_str).unwrap_or("") {
                "succeeded" => {
                    return Self::output_text(&prediction)
                        .map(ProviderReply::measured)
                        .ok_or_else(|| LlmError::ProviderUnavailable("prediction without output".into()));
                }
                "failed" | "canceled" => {
                    let reason = prediction.get("error").map(Value::to_string).unwrap_or_default();
                    return Err(LlmError::ProviderUnavailable(format!("prediction failed: {reason}")));
                }
                _ => {}
            }
            let poll = prediction
                .pointer("/urls/get")
                .and_then(Value::as_str)
                .ok_or_else(|| LlmError::ProviderUnavailable("prediction pending without poll URL".into()))?
                .to_string();
            thread::sleep(self.poll_interval);
            let req = HttpRequest::get(poll).header("Authorization", format!("Bearer {}", self.token));
            prediction = check_status(&self.transport.send(&req).map_err(map_transport)?)?;
        }
        Err(LlmError::ProviderUnavailable("prediction did not finish in time".into()))
    }
}

/// OpenAI-compatible chat completions endpoint.
pub struct OpenAiProvider {
    transport: Arc<dyn Transport>,
    api_key: String,
    base: String,
}

impl OpenAiProvider {
    pub fn new(transport: Arc<dyn Transport>, api_key: impl Into<String>, base: impl Into<String>) -> Self {
        Self { transport, api_key: api_key.into(), base: base.into() }
    }

    pub fn from_env(transport: Arc<dyn Transport>, base: Option<String>) -> Result<Self, LlmError> {
        Ok(Self::new(transport, env_secret(OPENAI_KEY_ENV)?, base.unwrap_or_else(|| OPENAI_API.into())))
    }

    pub fn chat_request(&self, request: &LlmRequest) -> HttpRequest {
        let p = &request.params;
        let body = json!({
            "model": p.model,
            "messages": [
                {"role": "system", "content": p.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "seed": p.seed,
            "top_p": p.top_p,
            "temperature": p.temperature,
            "max_tokens": p.max_new_tokens,
        });
        HttpRequest::post(format!("{}/chat/completions", self.base.trim_end_matches('/')), body.to_string())
            .header("Authorization", format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
    }
}

impl LlmProvider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai"
    }

    fn complete(&self, request: &LlmRequest) -> Result<ProviderReply, LlmError> {
        let response = self.transport.send(&self.chat_request(request)).map_err(map_transport)?;
        let body = check_status(&response)?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(ProviderReply::measured)
            .ok_or_else(|| LlmError::ProviderUnavailable("response without message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::FixtureTransport;
    use crate::llm::default_params;

    fn ok(body: Value) -> HttpResponse {
        HttpResponse { status: 200, content_type: Some("application/json".into()), body: body.to_string().into() }
    }

    #[test]
    fn replicate_concatenates_output_tokens() {
        let req = LlmRequest::new(default_params(), "Can the given RDF be inferred?");
        let shape = ReplicateProvider::new(Arc::new(FixtureTransport::new()), "secret");
        let http = shape.prediction_request(&req);
        assert!(http.url.ends_with("/models/meta/meta-llama-3-70b-instruct/predictions"));
        let input: Value = serde_json::from_str(http.body.as_deref().unwrap()).unwrap();
        assert_eq!(input["input"]["seed"], 42);
        assert_eq!(input["input"]["min_new_tokens"], -1);
        let other = ReplicateProvider::new(Arc::new(FixtureTransport::new()), "other-secret");
        assert_eq!(http.fingerprint(), other.prediction_request(&req).fingerprint());

        let t = FixtureTransport::new()
            .with(http, ok(json!({"status": "succeeded", "output": ["The correct", " answer is: a)"]})));
        let p = ReplicateProvider::new(Arc::new(t), "secret");
        assert_eq!(p.complete(&req).unwrap().text, "The correct answer is: a)");
    }

    #[test]
    fn openai_reads_first_choice() {
        let req = LlmRequest::new(default_params(), "hello");
        let shape = OpenAiProvider::new(Arc::new(FixtureTransport::new()), "k", OPENAI_API);
        let t = FixtureTransport::new()
            .with(shape.chat_request(&req), ok(json!({"choices": [{"message": {"content": "c) no"}}]})));
        let p = OpenAiProvider::new(Arc::new(t), "k", OPENAI_API);
        assert_eq!(p.complete(&req).unwrap().text, "c) no");
        let unavailable = FixtureTransport::new().with(
            shape.chat_request(&req),
            HttpResponse { status: 503, content_type: None, body: Vec::new() },
        );
        let p = OpenAiProvider::new(Arc::new(unavailable), "k", OPENAI_API);
        assert!(p.complete(&req).unwrap_err().is_retryable());
    }
}
