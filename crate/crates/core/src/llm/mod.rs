//! OpenAI-compatible chat completions client.
//!
//! The HTTP layer sits behind [`Transport`] so tests can script responses.
//! Transient failures (timeouts, 429, 5xx, unreadable bodies) are retried
//! with exponential backoff; authentication failures are not.

pub mod templates;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_KEY_ENV: &str = "LAWCRAFT_LLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("no API key: environment variable {env} is not set")]
    MissingKey { env: String },
    #[error("request {request_id}: authentication rejected (HTTP {status})")]
    Auth { request_id: String, status: u16 },
    #[error("request {request_id}: timed out")]
    Timeout { request_id: String },
    #[error("request {request_id}: HTTP {status}: {body}")]
    Http { request_id: String, status: u16, body: String },
    #[error("request {request_id}: malformed response: {message}")]
    Malformed { request_id: String, message: String },
    #[error("request {request_id}: transport error: {message}")]
    Transport { request_id: String, message: String },
}

impl LlmError {
    fn retryable(&self) -> bool {
        match self {
            LlmError::Timeout { .. } | LlmError::Malformed { .. } | LlmError::Transport { .. } => true,
            LlmError::Http { status, .. } => *status == 429 || *status >= 500,
            LlmError::MissingKey { .. } | LlmError::Auth { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "deepseek-chat".into(),
            api_key_env: DEFAULT_KEY_ENV.into(),
            max_retries: 3,
            backoff_ms: 500,
            timeout_ms: 60_000,
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Other(String),
}

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<TransportResponse, TransportError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<HttpTransport, TransportError> {
        let client = reqwest::blocking::Client::builder().build().map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<TransportResponse, TransportError> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .timeout(timeout)
            .json(body)
            .send()
            .map_err(|e| if e.is_timeout() { TransportError::Timeout } else { TransportError::Other(e.to_string()) })?;
        let status = resp.status().as_u16();
        let request_id = resp.headers().get("x-request-id").and_then(|v| v.to_str().ok()).map(str::to_string);
        let body = resp.text().map_err(|e| if e.is_timeout() { TransportError::Timeout } else { TransportError::Other(e.to_string()) })?;
        Ok(TransportResponse { status, body, request_id })
    }
}

/// Anything that turns a conversation into a reply.
pub trait ChatModel: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

/// Chat client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct ChatClient {
    config: GatewayConfig,
    transport: Box<dyn Transport>,
    key_lookup: Box<dyn Fn(&str) -> Option<String> + Send + Sync>,
    counter: AtomicU64,
}

impl ChatClient {
    pub fn new(config: GatewayConfig, transport: Box<dyn Transport>) -> ChatClient {
        ChatClient { config, transport, key_lookup: Box::new(|name| std::env::var(name).ok()), counter: AtomicU64::new(0) }
    }

    pub fn from_env(config: GatewayConfig) -> Result<ChatClient, LlmError> {
        let transport = HttpTransport::new().map_err(|e| LlmError::Transport {
            request_id: "-".into(),
            message: format!("{e:?}"),
        })?;
        Ok(ChatClient::new(config, Box::new(transport)))
    }

    /// Replaces the environment lookup used to find the API key.
    pub fn with_key_lookup(mut self, lookup: impl Fn(&str) -> Option<String> + Send + Sync + 'static) -> ChatClient {
        self.key_lookup = Box::new(lookup);
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    fn request_body(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
    }

    fn attempt(&self, url: &str, key: &str, body: &Value, local_id: &str) -> Result<String, LlmError> {
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let resp = match self.transport.post_json(url, key, body, timeout) {
            Ok(r) => r,
            Err(TransportError::Timeout) => return Err(LlmError::Timeout { request_id: local_id.into() }),
            Err(TransportError::Other(message)) => return Err(LlmError::Transport { request_id: local_id.into(), message }),
        };
        let request_id = resp.request_id.clone().unwrap_or_else(|| local_id.to_string());
        match resp.status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth { request_id, status: resp.status }),
            status => {
                let body: String = resp.body.chars().take(200).collect();
                return Err(LlmError::Http { request_id, status, body });
            }
        }
        let v: Value = serde_json::from_str(&resp.body).map_err(|e| LlmError::Malformed { request_id: request_id.clone(), message: e.to_string() })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or(LlmError::Malformed { request_id, message: "missing choices[0].message.content".into() })
    }
}

impl ChatModel for ChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let env = &self.config.api_key_env;
        let key = (self.key_lookup)(env).filter(|k| !k.is_empty()).ok_or_else(|| LlmError::MissingKey { env: env.clone() })?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = self.request_body(messages);
        let local_id = format!("lc-{:06}", self.counter.fetch_add(1, Ordering::Relaxed) + 1);
        let mut attempt = 0;
        loop {
            match self.attempt(&url, &key, &body, &local_id) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable() && attempt < self.config.max_retries => {
                    tracing::warn!(error = %e, attempt, "retrying chat request");
                    std::thread::sleep(Duration::from_millis(self.config.backoff_ms.saturating_mul(1 << attempt.min(16))));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// A model driven by a closure, for offline runs and tests.
pub struct ScriptedModel {
    respond: Box<dyn Fn(&[ChatMessage]) -> Result<String, LlmError> + Send + Sync>,
}

impl ScriptedModel {
    pub fn new(respond: impl Fn(&[ChatMessage]) -> Result<String, LlmError> + Send + Sync + 'static) -> ScriptedModel {
        ScriptedModel { respond: Box::new(respond) }
    }
}

impl ChatModel for ScriptedModel {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        (self.respond)(messages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Canned {
        replies: Mutex<Vec<Result<TransportResponse, TransportError>>>,
        calls: Mutex<Vec<Value>>,
    }

    impl Transport for std::sync::Arc<Canned> {
        fn post_json(&self, _url: &str, _key: &str, body: &Value, _t: Duration) -> Result<TransportResponse, TransportError> {
            self.calls.lock().unwrap().push(body.clone());
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn ok(content: &str) -> Result<TransportResponse, TransportError> {
        let body = json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
        Ok(TransportResponse { status: 200, body, request_id: None })
    }

    fn client(replies: Vec<Result<TransportResponse, TransportError>>) -> (ChatClient, std::sync::Arc<Canned>) {
        let canned = std::sync::Arc::new(Canned { replies: Mutex::new(replies), calls: Mutex::new(Vec::new()) });
        let cfg = GatewayConfig { backoff_ms: 0, ..GatewayConfig::default() };
        let c = ChatClient::new(cfg, Box::new(canned.clone())).with_key_lookup(|_| Some("k".into()));
        (c, canned)
    }

    #[test]
    fn retries_transient_failures() {
        let (c, canned) = client(vec![
            Err(TransportError::Timeout),
            Ok(TransportResponse { status: 503, body: "busy".into(), request_id: None }),
            ok("hello"),
        ]);
        assert_eq!(c.complete(&[ChatMessage::user("hi")]).unwrap(), "hello");
        let calls = canned.calls.lock().unwrap();
        assert_eq!(calls.len(), 3);
        assert_eq!(calls[0]["messages"][0]["role"], "user");
    }

    #[test]
    fn malformed_body_fails_after_retries() {
        let bad = || Ok(TransportResponse { status: 200, body: "{not json".into(), request_id: Some("abc".into()) });
        let (c, _) = client(vec![bad(), bad(), bad(), bad()]);
        let err = c.complete(&[ChatMessage::user("hi")]).unwrap_err();
        assert!(matches!(err, LlmError::Malformed { ref request_id, .. } if request_id == "abc"), "{err}");
    }

    #[test]
    fn auth_errors_are_not_retried() {
        let (c, canned) = client(vec![Ok(TransportResponse { status: 401, body: String::new(), request_id: None }), ok("x")]);
        assert!(matches!(c.complete(&[ChatMessage::user("hi")]), Err(LlmError::Auth { status: 401, .. })));
        assert_eq!(canned.calls.lock().unwrap().len(), 1);
    }

    #[test]
    fn missing_key_names_the_variable() {
        let (c, _) = client(vec![]);
        let c = c.with_key_lookup(|_| None);
        let err = c.complete(&[]).unwrap_err();
        assert!(err.to_string().contains(DEFAULT_KEY_ENV));
    }
}
