//! Chat-completion backend over HTTP JSON.
//!
//! Request body: `{"model", "messages": [{"role","content"}...], "temperature", "max_tokens"}`.
//! The reply text is read from `choices[0].message.content`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::client::{validate_history, ChatClient, ChatError, CompletionRequest};
use super::retry::{RateLimiter, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    /// Requests per second; 0 disables pacing.
    pub requests_per_second: f64,
    pub burst: f64,
    /// Maximum in-flight requests; 0 means unbounded.
    pub max_concurrency: usize,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            temperature: 1.0,
            max_tokens: 256,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
            requests_per_second: 0.0,
            burst: 1.0,
            max_concurrency: 8,
        }
    }
}

pub struct HttpChatClient {
    config: HttpBackendConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl HttpChatClient {
    pub fn new(config: HttpBackendConfig) -> Result<Self, ChatError> {
        let api_key = match &config.api_key_env {
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Some(v),
                _ => None,
            },
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| ChatError::Unavailable(e.to_string()))?;
        let limiter = RateLimiter::new(config.requests_per_second, config.burst, config.max_concurrency);
        Ok(Self {
            config,
            api_key,
            http,
            limiter,
        })
    }

    pub fn request_body(&self, request: &CompletionRequest<'_>) -> Value {
        let mut messages = Vec::with_capacity(request.messages.len() + 1);
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        for m in request.messages {
            messages.push(json!({"role": m.role, "content": m.content}));
        }
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
    }

    fn send_once(&self, body: &Value) -> Result<String, ChatError> {
        let _permit = self.limiter.acquire();
        let mut req = self.http.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ChatError::Http {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        extract_content(&text)
    }
}

pub fn extract_content(body: &str) -> Result<String, ChatError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ChatError::Decode(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ChatError::Decode("missing choices[0].message.content".into()))
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        validate_history(request.messages)?;
        let body = self.request_body(request);
        self.config.retry.run(|| self.send_once(&body), std::thread::sleep)
    }

    fn id(&self) -> String {
        format!("http:{}@{}", self.config.model, self.config.endpoint)
    }
}
