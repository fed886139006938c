//! Remote plan source.
//!
//! The client only moves text. Whatever comes back is handed to the strict
//! plan parser and the validator like any other plan.

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

use super::prompt::PromptBundle;

pub const ENV_BASE_URL: &str = "INTENTCELL_LLM_BASE_URL";
pub const ENV_MODEL: &str = "INTENTCELL_LLM_MODEL";
pub const ENV_API_KEY: &str = "INTENTCELL_LLM_API_KEY";

const AUDIT: &str = "intentcell::llm::audit";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transport failure after {attempts} attempt(s): {reason}")]
    TransportFailure { attempts: u32, reason: String },
    #[error("model returned an empty response")]
    EmptyResponse,
    #[error("model endpoint cannot be reached: {0}")]
    CannotReach(String),
    #[error("model client not configured: {0}")]
    NotConfigured(String),
    #[error("malformed response body: {0}")]
    BadResponse(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::Timeout { .. } => "Timeout",
            LlmError::TransportFailure { .. } => "TransportFailure",
            LlmError::EmptyResponse => "EmptyResponse",
            LlmError::CannotReach(_) => "CannotReach",
            LlmError::NotConfigured(_) => "NotConfigured",
            LlmError::BadResponse(_) => "BadResponse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub timeout_s: f64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// First backoff delay; doubles on each retry.
    pub backoff_ms: u64,
    /// Never touch the network; every call fails with `CannotReach`.
    pub offline: bool,
    pub temperature: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            timeout_s: 30.0,
            retries: 2,
            backoff_ms: 500,
            offline: false,
            temperature: 0.0,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, bundle: &PromptBundle) -> Result<String, LlmError>;
}

/// Raw model text for `bundle`; blank replies are errors.
pub fn plan_llm(bundle: &PromptBundle, client: &dyn LlmClient) -> Result<String, LlmError> {
    let text = client.complete(bundle)?;
    if text.trim().is_empty() {
        return Err(LlmError::EmptyResponse);
    }
    Ok(text)
}

/// Replies with a fixed result. For tests and dry runs.
#[derive(Debug, Clone)]
pub struct StubClient {
    pub model: String,
    pub reply: Result<String, LlmError>,
}

impl StubClient {
    pub fn new(reply: impl Into<String>) -> Self {
        Self {
            model: "stub".into(),
            reply: Ok(reply.into()),
        }
    }

    pub fn failing(error: LlmError) -> Self {
        Self {
            model: "stub".into(),
            reply: Err(error),
        }
    }
}

impl LlmClient for StubClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, _bundle: &PromptBundle) -> Result<String, LlmError> {
        self.reply.clone()
    }
}

#[derive(Debug, Clone, Default)]
pub struct OfflineClient;

impl LlmClient for OfflineClient {
    fn model_id(&self) -> &str {
        "offline"
    }

    fn complete(&self, _bundle: &PromptBundle) -> Result<String, LlmError> {
        Err(LlmError::CannotReach("offline mode".into()))
    }
}

/// Client for a chat-completions style HTTP endpoint.
pub struct ChatCompletionClient {
    base_url: String,
    model: String,
    api_key: Option<String>,
    config: LlmConfig,
    http: reqwest::blocking::Client,
}

impl std::fmt::Debug for ChatCompletionClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatCompletionClient")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "[REDACTED]"))
            .finish()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage; 2],
}

#[derive(Serialize, Deserialize)]
struct ChatMessage {
    role: String,
    content: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Retry(LlmError),
    Fatal(LlmError),
}

impl ChatCompletionClient {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        config: LlmConfig,
    ) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build()
            .map_err(|e| LlmError::NotConfigured(e.to_string()))?;
        Ok(Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key: api_key.filter(|k| !k.is_empty()),
            config,
            http,
        })
    }

    /// Reads endpoint, model and key from the environment.
    pub fn from_env(config: LlmConfig) -> Result<Self, LlmError> {
        let var = |k: &str| std::env::var(k).map_err(|_| LlmError::NotConfigured(format!("{k} is not set")));
        let base = var(ENV_BASE_URL)?;
        let model = var(ENV_MODEL)?;
        Self::new(base, model, std::env::var(ENV_API_KEY).ok(), config)
    }

    fn redact(&self, text: &str) -> String {
        match &self.api_key {
            Some(k) => text.replace(k.as_str(), "[REDACTED]"),
            None => text.to_string(),
        }
    }

    fn attempt(&self, url: &str, body: &str) -> Result<String, Attempt> {
        let mut req = self
            .http
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string());
        if let Some(k) = &self.api_key {
            req = req.header("authorization", format!("Bearer {k}"));
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(LlmError::Timeout { attempts: 0 })
            } else {
                Attempt::Retry(LlmError::TransportFailure {
                    attempts: 0,
                    reason: self.redact(&e.to_string()),
                })
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            let err = if e.is_timeout() {
                LlmError::Timeout { attempts: 0 }
            } else {
                LlmError::TransportFailure {
                    attempts: 0,
                    reason: e.to_string(),
                }
            };
            Attempt::Retry(err)
        })?;
        tracing::info!(target: AUDIT, status = status.as_u16(), response = %self.redact(&text), "llm response");
        if !status.is_success() {
            let err = LlmError::TransportFailure {
                attempts: 0,
                reason: format!("http status {status}"),
            };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| Attempt::Fatal(LlmError::BadResponse(e.to_string())))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        Ok(content)
    }
}

impl LlmClient for ChatCompletionClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, LlmError> {
        if self.config.offline {
            return Err(LlmError::CannotReach("offline mode".into()));
        }
        let url = format!("{}/chat/completions", self.base_url);
        let body = serde_json::to_string(&ChatRequest {
            model: &self.model,
            temperature: self.config.temperature,
            messages: [
                ChatMessage {
                    role: "system".into(),
                    content: bundle.system_text(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: bundle.user_text(),
                },
            ],
        })
        .map_err(|e| LlmError::BadResponse(e.to_string()))?;
        tracing::info!(
            target: AUDIT,
            url = %url,
            authorization = if self.api_key.is_some() { "Bearer [REDACTED]" } else { "none" },
            request = %self.redact(&body),
            "llm request"
        );

        let attempts = self.config.retries + 1;
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut n = 0;
        loop {
            n += 1;
            match self.attempt(&url, &body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(with_attempts(e, n)),
                Err(Attempt::Retry(e)) if n >= attempts => return Err(with_attempts(e, n)),
                Err(Attempt::Retry(e)) => {
                    tracing::warn!(attempt = n, error = %e, "llm request failed, retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

fn with_attempts(e: LlmError, n: u32) -> LlmError {
    match e {
        LlmError::Timeout { .. } => LlmError::Timeout { attempts: n },
        LlmError::TransportFailure { reason, .. } => LlmError::TransportFailure { attempts: n, reason },
        other => other,
    }
}
