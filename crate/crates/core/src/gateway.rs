//! Uniform completion interface over model backends.
//!
//! Two backends ship: [`ScriptedBackend`], which replays a fixed list of
//! replies and makes every agent episode and evaluation run reproducible,
//! and [`HttpBackend`], which talks to a chat-completions style endpoint.
//! [`FnBackend`] wraps a closure for ad-hoc oracles in tests and examples.

use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const MAX_STOP_SEQUENCES: usize = 8;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("scripted backend needs at least one step")]
    EmptyScript,
    #[error("scripted backend exhausted after {steps} steps")]
    ScriptExhausted { steps: usize },
    #[error("scripted step {step} expects the prompt to contain {matcher:?}")]
    ScriptMismatch { step: usize, matcher: String },
    #[error("transport error talking to {url}: {message} (retryable: {retryable})")]
    Transport {
        url: String,
        message: String,
        retryable: bool,
    },
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

impl GatewayError {
    /// Whether repeating the same request may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport { retryable: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    #[serde(default)]
    pub stop_sequences: Vec<String>,
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
}

impl CompletionRequest {
    /// Greedy request with no stop sequences.
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            stop_sequences: Vec::new(),
            max_tokens: 512,
            temperature: 0.0,
        }
    }

    pub fn with_stop(mut self, stop: impl Into<String>) -> Self {
        self.stop_sequences.push(stop.into());
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.is_empty() {
            return Err(GatewayError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if self.stop_sequences.len() > MAX_STOP_SEQUENCES {
            return Err(GatewayError::InvalidRequest(format!(
                "at most {MAX_STOP_SEQUENCES} stop sequences allowed, got {}",
                self.stop_sequences.len()
            )));
        }
        if self.stop_sequences.iter().any(String::is_empty) {
            return Err(GatewayError::InvalidRequest("empty stop sequence".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    StopSequence,
    Length,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// A model endpoint. Implementations must tolerate concurrent calls.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError>;

    /// Short identifier recorded in run metadata.
    fn id(&self) -> String;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        (**self).complete(request)
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        (**self).complete(request)
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

/// Cut `text` at the earliest occurrence of any stop sequence.
///
/// Returns the kept prefix and whether a cut happened.
pub fn truncate_at_stop<'a>(text: &'a str, stops: &[String]) -> (&'a str, bool) {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min();
    match cut {
        Some(pos) => (&text[..pos], true),
        None => (text, false),
    }
}

/// Keep at most `max_tokens` whitespace-delimited tokens of `text`.
fn truncate_tokens(text: &str, max_tokens: u32) -> (&str, bool) {
    let mut seen = 0u32;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_token = false;
        } else if !in_token {
            in_token = true;
            seen += 1;
            if seen > max_tokens {
                return (text[..i].trim_end(), true);
            }
        }
    }
    (text, false)
}

fn finish(raw: &str, request: &CompletionRequest, upstream: FinishReason) -> CompletionResponse {
    let (text, stopped) = truncate_at_stop(raw, &request.stop_sequences);
    if stopped {
        return CompletionResponse {
            text: text.to_string(),
            finish_reason: FinishReason::StopSequence,
        };
    }
    let (text, cut) = truncate_tokens(text, request.max_tokens);
    CompletionResponse {
        text: text.to_string(),
        finish_reason: if cut { FinishReason::Length } else { upstream },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    /// Substring the prompt must contain; empty matches anything.
    pub matcher: String,
    pub reply: String,
}

impl ScriptStep {
    pub fn new(matcher: impl Into<String>, reply: impl Into<String>) -> Self {
        ScriptStep {
            matcher: matcher.into(),
            reply: reply.into(),
        }
    }
}

/// Replays a fixed list of replies in order, one per `complete` call.
///
/// The cursor belongs to a single session; use [`ScriptedBackend::fresh`] to
/// hand an identical script to another session.
#[derive(Debug)]
pub struct ScriptedBackend {
    steps: Vec<ScriptStep>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(steps: Vec<ScriptStep>) -> Result<Self, GatewayError> {
        if steps.is_empty() {
            return Err(GatewayError::EmptyScript);
        }
        Ok(ScriptedBackend {
            steps,
            cursor: Mutex::new(0),
        })
    }

    /// Load a script from a JSON array of `{"matcher", "reply"}` objects.
    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let steps: Vec<ScriptStep> =
            serde_json::from_str(text).map_err(|e| GatewayError::Config(format!("script: {e}")))?;
        Self::new(steps)
    }

    /// Same script, cursor rewound to 0.
    pub fn fresh(&self) -> Self {
        ScriptedBackend {
            steps: self.steps.clone(),
            cursor: Mutex::new(0),
        }
    }

    pub fn cursor(&self) -> usize {
        *self.cursor.lock().unwrap()
    }

    pub fn steps(&self) -> &[ScriptStep] {
        &self.steps
    }

    pub fn remaining(&self) -> usize {
        self.steps.len() - self.cursor()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        request.validate()?;
        let mut cursor = self.cursor.lock().unwrap();
        let step = self.steps.get(*cursor).ok_or(GatewayError::ScriptExhausted {
            steps: self.steps.len(),
        })?;
        if !request.prompt.contains(&step.matcher) {
            return Err(GatewayError::ScriptMismatch {
                step: *cursor,
                matcher: step.matcher.clone(),
            });
        }
        *cursor += 1;
        Ok(finish(&step.reply, request, FinishReason::End))
    }

    fn id(&self) -> String {
        format!("scripted:{}", self.steps.len())
    }
}

/// Build a scripted backend from `(matcher, reply)` pairs.
pub fn make_scripted_backend<M, R>(steps: impl IntoIterator<Item = (M, R)>) -> Result<ScriptedBackend, GatewayError>
where
    M: Into<String>,
    R: Into<String>,
{
    ScriptedBackend::new(steps.into_iter().map(|(m, r)| ScriptStep::new(m, r)).collect())
}

/// Backend defined by a closure from prompt to raw reply text.
///
/// Stop sequences and `max_tokens` are applied to the returned text.
pub struct FnBackend<F> {
    name: String,
    reply: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&CompletionRequest) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, reply: F) -> Self {
        FnBackend {
            name: name.into(),
            reply,
        }
    }
}

impl<F> fmt::Debug for FnBackend<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnBackend").field("name", &self.name).finish()
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&CompletionRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        request.validate()?;
        let raw = (self.reply)(request)?;
        Ok(finish(&raw, request, FinishReason::End))
    }

    fn id(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Http,
}

/// The `{ "backend", "url", "auth_env_var", "model", "timeout_s" }` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    pub backend: BackendKind,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    /// Path to a JSON script, for the scripted backend.
    #[serde(default)]
    pub script: Option<String>,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

impl GatewayConfig {
    pub fn build(&self) -> Result<Box<dyn Backend>, GatewayError> {
        match self.backend {
            BackendKind::Scripted => {
                let path = self
                    .script
                    .as_deref()
                    .ok_or_else(|| GatewayError::Config("scripted backend needs a \"script\" path".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| GatewayError::Config(format!("reading {path}: {e}")))?;
                Ok(Box::new(ScriptedBackend::from_json(&text)?))
            }
            BackendKind::Http => Ok(Box::new(HttpBackend::from_config(self)?)),
        }
    }
}

/// Chat-completions style HTTP backend.
///
/// Sends `{"model", "messages": [{"role": "user", "content": prompt}], "max_tokens",
/// "temperature", "stop"}` and reads `choices[0].message.content` (or
/// `choices[0].text`).
pub struct HttpBackend {
    url: String,
    model: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("url", &self.url)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, model: impl Into<String>, token: Option<String>, timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend {
            url: url.into(),
            model: model.into(),
            token,
            client,
        })
    }

    pub fn from_config(config: &GatewayConfig) -> Result<Self, GatewayError> {
        let url = config
            .url
            .clone()
            .ok_or_else(|| GatewayError::Config("http backend needs \"url\"".into()))?;
        let token = match &config.auth_env_var {
            Some(var) => Some(
                std::env::var(var).map_err(|_| GatewayError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let model = config.model.clone().unwrap_or_default();
        Self::new(url, model, token, Duration::from_secs(config.timeout_s))
    }

    fn transport(&self, message: String, retryable: bool) -> GatewayError {
        GatewayError::Transport {
            url: self.url.clone(),
            message,
            retryable,
        }
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        request.validate()?;
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        if !request.stop_sequences.is_empty() {
            body["stop"] = json!(request.stop_sequences);
        }
        let mut call = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.token {
            call = call.bearer_auth(token);
        }
        let resp = call.send().map_err(|e| self.transport(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err(self.transport(format!("HTTP {status}"), retryable));
        }
        let value: Value = resp.json().map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        let choice = value
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| GatewayError::BadResponse("no choices in response".into()))?;
        let text = choice
            .pointer("/message/content")
            .or_else(|| choice.get("text"))
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::BadResponse("choice carries no text".into()))?;
        let upstream = match choice.get("finish_reason").and_then(Value::as_str) {
            Some("length") => FinishReason::Length,
            _ => FinishReason::End,
        };
        Ok(finish(text, request, upstream))
    }

    fn id(&self) -> String {
        format!("http:{}", self.model)
    }
}
