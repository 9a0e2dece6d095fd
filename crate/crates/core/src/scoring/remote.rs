//! Wire-compatible client for Perspective-style comment-analysis endpoints:
//! JSON POST with `comment.text` and `requestedAttributes.TOXICITY`, summary
//! score parsed from the response, QPS admission control, bounded retries.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::clock::Clock;
use super::rate_limit::RateLimiter;
use super::{ScoreResult, Scorer, ScoringError};

pub const DEFAULT_ENDPOINT: &str =
    "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";

/// Remote scorer endpoint, credentials source, and rate/payload limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key; `None` sends no
    /// key (useful against self-hosted endpoints). Key material never lives
    /// in config files.
    pub api_key_env: Option<String>,
    /// Admission cap in queries per second.
    pub qps: f64,
    /// Requests over this many UTF-8 bytes are refused locally.
    pub max_payload_bytes: usize,
    /// Total attempts per query, including the first.
    pub max_attempts: u32,
    /// Base backoff between attempts; attempt `n` waits `n` times this.
    pub backoff_ms: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key_env: Some("PERSPECTIVE_API_KEY".to_string()),
            qps: 50.0,
            max_payload_bytes: 3000,
            max_attempts: 3,
            backoff_ms: 200,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !self.qps.is_finite() || self.qps <= 0.0 {
            return Err(ScoringError::InvalidConfig(format!(
                "qps must be positive, got {}",
                self.qps
            )));
        }
        if self.max_payload_bytes == 0 {
            return Err(ScoringError::InvalidConfig(
                "max_payload_bytes must be positive".into(),
            ));
        }
        if self.max_attempts == 0 {
            return Err(ScoringError::InvalidConfig(
                "max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Raw HTTP response as the transport layer sees it.
#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Connection-level failure (DNS, refused, timeout).
#[derive(Debug, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Minimal HTTP POST abstraction so tests can substitute a mock transport.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
    ) -> Result<HttpResponse, TransportError>;
}

/// Production transport backed by a blocking reqwest client.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("reqwest client");
        ReqwestTransport { client }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
    ) -> Result<HttpResponse, TransportError> {
        let response = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Black-box HTTP scorer honoring the payload, QPS, and retry contracts.
pub struct RemoteScorer {
    id: String,
    config: ScorerConfig,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    span_annotations: bool,
}

impl RemoteScorer {
    /// Validates the config and resolves the API key from the configured
    /// environment variable; fails fast when the variable is unset.
    pub fn new(
        config: ScorerConfig,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ScoringError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| ScoringError::MissingApiKey { var: var.clone() })?,
            ),
            None => None,
        };
        let limiter = RateLimiter::new(config.qps, 1, clock.clone());
        Ok(RemoteScorer {
            id: "perspective".to_string(),
            config,
            api_key,
            transport,
            limiter,
            clock,
            span_annotations: false,
        })
    }

    /// Request sentence-level span scores as well. Supported by the wire
    /// format but unused by the word locator.
    pub fn with_span_annotations(mut self, on: bool) -> Self {
        self.span_annotations = on;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn url(&self) -> String {
        match &self.api_key {
            Some(key) => format!("{}?key={}", self.config.endpoint, key),
            None => self.config.endpoint.clone(),
        }
    }

    fn request_body(&self, text: &str) -> serde_json::Value {
        let mut body = json!({
            "comment": { "text": text },
            "requestedAttributes": { "TOXICITY": {} },
        });
        if self.span_annotations {
            body["spanAnnotations"] = json!(true);
        }
        body
    }
}

fn parse_summary_score(body: &str) -> ScoreResult {
    let parsed: serde_json::Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return ScoreResult::unscored(format!("unparseable response: {e}")),
    };
    match parsed
        .pointer("/attributeScores/TOXICITY/summaryScore/value")
        .and_then(serde_json::Value::as_f64)
    {
        Some(value) if (0.0..=1.0).contains(&value) => ScoreResult::single(value),
        Some(value) => ScoreResult::unscored(format!("summary score {value} out of range")),
        None => ScoreResult::unscored("response carries no TOXICITY summary score".to_string()),
    }
}

fn extract_error_message(body: &str) -> Option<String> {
    let parsed: serde_json::Value = serde_json::from_str(body).ok()?;
    parsed
        .pointer("/error/message")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string)
}

/// The scorer's way of saying the input language is unsupported; such answers
/// are definitive, not transient.
fn is_unsupported_language(message: &str) -> bool {
    let lower = message.to_lowercase();
    lower.contains("needs more training data")
        || lower.contains("does not support request languages")
}

impl Scorer for RemoteScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        let actual = text.len();
        if actual > self.config.max_payload_bytes {
            return Err(ScoringError::PayloadTooLarge {
                actual,
                limit: self.config.max_payload_bytes,
            });
        }

        let url = self.url();
        let body = self.request_body(text);
        let mut last_failure = String::new();
        for attempt in 1..=self.config.max_attempts {
            self.limiter.acquire();
            match self.transport.post_json(&url, &body) {
                Ok(response) if (200..300).contains(&response.status) => {
                    return Ok(parse_summary_score(&response.body));
                }
                Ok(response) => {
                    let message = extract_error_message(&response.body)
                        .unwrap_or_else(|| format!("HTTP {}", response.status));
                    if is_unsupported_language(&message) {
                        return Ok(ScoreResult::unscored(message));
                    }
                    last_failure = format!("HTTP {}: {message}", response.status);
                }
                Err(err) => {
                    last_failure = format!("transport: {err}");
                }
            }
            if attempt < self.config.max_attempts {
                self.clock.sleep(Duration::from_millis(
                    self.config.backoff_ms * u64::from(attempt),
                ));
            }
        }
        Ok(ScoreResult::unscored(format!(
            "{last_failure} (after {} attempts)",
            self.config.max_attempts
        )))
    }
}
