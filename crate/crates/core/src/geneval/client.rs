//! Text-generation clients: a chat-completions HTTP client and a
//! scriptable stub for tests. Credentials come from the environment
//! only, never from config files or flags.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::retry::Backoff;

/// Environment variable holding the bearer token for the generation
/// endpoint.
pub const API_KEY_ENV: &str = "DIALIGN_GENERATION_API_KEY";

/// Fixed decoding settings; the defaults remove sampling variance so
/// prompt conditioning is the only difference between runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams { temperature: 0.0, top_p: 1.0, max_tokens: 512 }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("authentication rejected")]
    Auth,
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("network: {0}")]
    Network(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Network(_) => true,
            ClientError::Status(code) => *code == 429 || (500..600).contains(code),
            ClientError::Auth | ClientError::Protocol(_) => false,
        }
    }
}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        ClientError::Network(e.to_string())
    }
}

/// One successful generation, with the raw body kept for audit.
#[derive(Debug, Clone)]
pub struct Completion {
    pub text: String,
    pub raw: serde_json::Value,
    pub latency_ms: u64,
}

#[async_trait]
pub trait GenerationClient: Send + Sync {
    async fn complete(
        &self,
        prompt: &str,
        decoding: &DecodingParams,
    ) -> Result<Completion, ClientError>;
}

/// Retries transient failures with backoff; the attempt count is
/// reported either way.
pub async fn generate(
    client: &dyn GenerationClient,
    prompt: &str,
    decoding: &DecodingParams,
    backoff: &Backoff,
) -> Result<(Completion, u32), (u32, ClientError)> {
    let mut tries = 0u32;
    let out = backoff
        .run(ClientError::is_retryable, || {
            tries += 1;
            client.complete(prompt, decoding)
        })
        .await;
    match out {
        Ok(c) => Ok((c, tries)),
        Err(e) => Err(e),
    }
}

/// Minimal chat-completions shape shared by the vendors this targets:
/// model name, a message list, and flat decoding params.
pub struct HttpChatClient {
    http: reqwest::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> HttpChatClient {
        HttpChatClient {
            http: reqwest::Client::new(),
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }
}

#[async_trait]
impl GenerationClient for HttpChatClient {
    async fn complete(
        &self,
        prompt: &str,
        decoding: &DecodingParams,
    ) -> Result<Completion, ClientError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": decoding.temperature,
            "top_p": decoding.top_p,
            "max_tokens": decoding.max_tokens,
        });
        let started = Instant::now();
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(ClientError::Auth);
        }
        if !(200..300).contains(&status) {
            return Err(ClientError::Status(status));
        }
        let raw: serde_json::Value = resp
            .json()
            .await
            .map_err(|e| ClientError::Protocol(format!("body is not JSON: {e}")))?;
        let text = raw
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                ClientError::Protocol("missing choices[0].message.content".to_string())
            })?
            .to_string();
        let latency_ms = started.elapsed().as_millis() as u64;
        Ok(Completion { text, raw, latency_ms })
    }
}

/// Test double. Computes output from the prompt unless a queued
/// failure is pending.
pub struct StubClient {
    respond: Box<dyn Fn(&str) -> String + Send + Sync>,
    failures: Mutex<VecDeque<ClientError>>,
    calls: AtomicUsize,
}

impl StubClient {
    pub fn new(respond: impl Fn(&str) -> String + Send + Sync + 'static) -> StubClient {
        StubClient {
            respond: Box::new(respond),
            failures: Mutex::new(VecDeque::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn canned(text: &str) -> StubClient {
        let text = text.to_string();
        StubClient::new(move |_| text.clone())
    }

    pub fn fail_next(&self, err: ClientError) {
        self.failures.lock().unwrap().push_back(err);
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl GenerationClient for StubClient {
    async fn complete(
        &self,
        prompt: &str,
        _decoding: &DecodingParams,
    ) -> Result<Completion, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(err) = self.failures.lock().unwrap().pop_front() {
            return Err(err);
        }
        let text = (self.respond)(prompt);
        let raw = json!({"stub": true, "content": text});
        Ok(Completion { text, raw, latency_ms: 0 })
    }
}
