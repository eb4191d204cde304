//! Blocking client for chat-completion style inference servers.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {0}")]
    HttpStatus(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
}

impl LlmError {
    fn retryable(&self) -> bool {
        match self {
            LlmError::Timeout | LlmError::Transport(_) => true,
            LlmError::HttpStatus(code) => *code == 429 || *code >= 500,
            LlmError::MalformedResponse(_) | LlmError::InvalidConfig(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpointConfig {
    /// Server base, e.g. `http://127.0.0.1:8000/v1`.
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_concurrent_requests: usize,
    pub retry_limit: u32,
    /// First retry delay; doubles on every further attempt.
    #[serde(with = "secs")]
    pub backoff_base: Duration,
    #[serde(skip_serializing)]
    pub api_token: Option<String>,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        LlmEndpointConfig {
            base_url: "http://127.0.0.1:8000/v1".to_string(),
            model_name: "log-parser".to_string(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(120),
            max_concurrent_requests: 4,
            retry_limit: 3,
            backoff_base: Duration::from_secs(1),
            api_token: None,
        }
    }
}

pub const ENV_BASE_URL: &str = "LOGSIFT_LLM_BASE_URL";
pub const ENV_API_TOKEN: &str = "LOGSIFT_LLM_TOKEN";

impl LlmEndpointConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(LlmError::InvalidConfig(format!(
                "base_url must be an http(s) URL, got {:?}",
                self.base_url
            )));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(LlmError::InvalidConfig("temperature must be in [0, 1]".into()));
        }
        if self.max_concurrent_requests == 0 {
            return Err(LlmError::InvalidConfig("max_concurrent_requests must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies `LOGSIFT_LLM_BASE_URL` / `LOGSIFT_LLM_TOKEN` when set.
    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(ENV_BASE_URL) {
            if !url.is_empty() {
                self.base_url = url;
            }
        }
        if let Ok(token) = std::env::var(ENV_API_TOKEN) {
            if !token.is_empty() {
                self.api_token = Some(token);
            }
        }
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    /// Delay before retry number `attempt` (1-based), with up to 50% jitter.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let nominal = self.backoff_base.as_secs_f64() * 2f64.powi(attempt.saturating_sub(1) as i32);
        let jitter = rand::rng().random_range(0.5..=1.0);
        Duration::from_secs_f64(nominal * jitter)
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Option<ChatMessage>,
    text: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

/// Request body sent for one prompt.
pub fn request_body(prompt: &str, cfg: &LlmEndpointConfig) -> serde_json::Value {
    json!({
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    })
}

/// Pulls the first choice's text out of a response body.
pub fn parse_response(body: &str) -> Result<String, LlmError> {
    let resp: ChatResponse =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let choice = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| LlmError::MalformedResponse("no choices".into()))?;
    choice
        .message
        .and_then(|m| m.content)
        .or(choice.text)
        .ok_or_else(|| LlmError::MalformedResponse("first choice has no content".into()))
}

pub struct LlmClient {
    cfg: LlmEndpointConfig,
    http: reqwest::blocking::Client,
}

impl LlmClient {
    pub fn new(cfg: LlmEndpointConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(LlmClient { cfg, http })
    }

    pub fn config(&self) -> &LlmEndpointConfig {
        &self.cfg
    }

    fn send_once(&self, prompt: &str) -> Result<String, LlmError> {
        let mut req = self
            .http
            .post(self.cfg.completions_url())
            .header("content-type", "application/json")
            .body(request_body(prompt, &self.cfg).to_string());
        if let Some(token) = &self.cfg.api_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::HttpStatus(status.as_u16()));
        }
        let body = resp.text().map_err(classify)?;
        parse_response(&body)
    }

    /// Sends `prompt`, retrying transient failures up to `retry_limit` times.
    pub fn request_templates(&self, prompt: &str) -> Result<String, LlmError> {
        let mut attempt = 0;
        loop {
            match self.send_once(prompt) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable() && attempt < self.cfg.retry_limit => {
                    attempt += 1;
                    log_retry(&e, attempt);
                    std::thread::sleep(self.cfg.backoff(attempt));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn log_retry(e: &LlmError, attempt: u32) {
    eprintln!("llm request failed ({e}); retry {attempt}");
}

fn classify(e: reqwest::Error) -> LlmError {
    if e.is_timeout() {
        LlmError::Timeout
    } else if let Some(status) = e.status() {
        LlmError::HttpStatus(status.as_u16())
    } else {
        LlmError::Transport(e.to_string())
    }
}

/// One-shot convenience wrapper.
pub fn request_templates(prompt: &str, cfg: &LlmEndpointConfig) -> Result<String, LlmError> {
    LlmClient::new(cfg.clone())?.request_templates(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_and_body() {
        let mut cfg = LlmEndpointConfig {
            base_url: "http://h:1/v1/".into(),
            ..LlmEndpointConfig::default()
        };
        assert_eq!(cfg.completions_url(), "http://h:1/v1/chat/completions");
        cfg.base_url = "http://h:1/v1/chat/completions".into();
        assert_eq!(cfg.completions_url(), "http://h:1/v1/chat/completions");
        let body = request_body("hi", &cfg);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn response_parsing() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"x"}}]}"#;
        assert_eq!(parse_response(ok).unwrap(), "x");
        assert_eq!(parse_response(r#"{"choices":[{"text":"y"}]}"#).unwrap(), "y");
        assert!(matches!(parse_response("{}"), Err(LlmError::MalformedResponse(_))));
        assert!(matches!(
            parse_response(r#"{"choices":[]}"#),
            Err(LlmError::MalformedResponse(_))
        ));
    }

    #[test]
    fn backoff_doubles_with_jitter() {
        let cfg = LlmEndpointConfig::default();
        for attempt in 1..=4 {
            let nominal = 2f64.powi(attempt as i32 - 1);
            let d = cfg.backoff(attempt).as_secs_f64();
            assert!(d >= nominal * 0.5 - 1e-9 && d <= nominal + 1e-9, "{attempt}: {d}");
        }
    }

    #[test]
    fn validation() {
        let mut cfg = LlmEndpointConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.temperature = 1.5;
        assert!(cfg.validate().is_err());
        cfg.temperature = 0.0;
        cfg.base_url = "ftp://x".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn retry_policy() {
        assert!(LlmError::Timeout.retryable());
        assert!(LlmError::HttpStatus(503).retryable());
        assert!(LlmError::HttpStatus(429).retryable());
        assert!(!LlmError::HttpStatus(400).retryable());
        assert!(!LlmError::MalformedResponse(String::new()).retryable());
    }
}
