//! Model backends behind one bounded, paced, retrying client.

mod http;
mod serve;
mod sim;

use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{Mutex, Semaphore};

use crate::strategy::Message;

pub use http::{decode_chat_response, HttpChat};
pub use serve::{serve_simulator, simulator_router};
pub use sim::{
    clinical_key, skew_for_ratio, CaseIndex, ConfusionKernel, SimProfile, Simulator, StrategyOverride,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("endpoint configuration: {0}")]
    Config(String),
    #[error("endpoint rejected credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("no usable response after {attempts} attempts (last status {last_status:?}): {last_error}")]
    PersistentFailure {
        attempts: u32,
        last_status: Option<u16>,
        last_error: String,
        /// Last response body text, possibly empty.
        last_text: String,
    },
    #[error("malformed chat response: {0}")]
    Decode(String),
}

/// Failure of a single request attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    Status { code: u16, body: String },
    Transport(String),
    Decode(String),
}

impl BackendError {
    fn status(&self) -> Option<u16> {
        match self {
            BackendError::Status { code, .. } => Some(*code),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            BackendError::Status { code, body } => format!("HTTP {code}: {}", truncate(body, 200)),
            BackendError::Transport(e) => format!("transport: {e}"),
            BackendError::Decode(e) => format!("decode: {e}"),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn send(&self, messages: &[Message], decode: &DecodeConfig) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { temperature: 0.0, max_tokens: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Wait before retry i is `backoff_secs[min(i, len - 1)]`.
    pub backoff_secs: Vec<f64>,
    /// Responses shorter than this (after trimming) are retried.
    pub min_response_chars: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            backoff_secs: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            min_response_chars: 10,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, retry: u32) -> Duration {
        let secs = self
            .backoff_secs
            .get(retry as usize)
            .or(self.backoff_secs.last())
            .copied()
            .unwrap_or(0.0);
        Duration::from_secs_f64(secs.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    HttpChat,
    Simulator,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub id: String,
    pub kind: EndpointKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Minimum spacing between request starts, in seconds. Defaults to 0.1 for
    /// HTTP endpoints and 0 for the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_request_delay: Option<f64>,
    /// Defaults to 4 for HTTP endpoints and 64 for the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_in_flight: Option<usize>,
    #[serde(default)]
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub simulator: Option<SimProfile>,
}

impl ModelEndpoint {
    pub fn simulator(id: &str, profile: SimProfile) -> ModelEndpoint {
        ModelEndpoint {
            id: id.to_string(),
            kind: EndpointKind::Simulator,
            base_url: None,
            model_name: None,
            api_key_env: None,
            inter_request_delay: None,
            max_in_flight: None,
            timeout_secs: None,
            simulator: Some(profile),
        }
    }

    pub fn delay_secs(&self) -> f64 {
        self.inter_request_delay.unwrap_or(match self.kind {
            EndpointKind::HttpChat => 0.1,
            EndpointKind::Simulator => 0.0,
        })
    }

    pub fn in_flight(&self) -> usize {
        self.max_in_flight.unwrap_or(match self.kind {
            EndpointKind::HttpChat => 4,
            EndpointKind::Simulator => 64,
        })
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: String| Err(GatewayError::Config(format!("{}: {m}", self.id)));
        if self.id.trim().is_empty() {
            return Err(GatewayError::Config("endpoint id is empty".into()));
        }
        if self.in_flight() == 0 {
            return bad("max_in_flight must be positive".into());
        }
        let delay = self.delay_secs();
        if !delay.is_finite() || delay < 0.0 {
            return bad("inter_request_delay must be a non-negative number".into());
        }
        match self.kind {
            EndpointKind::HttpChat => {
                if self.base_url.as_deref().is_none_or(|u| u.trim().is_empty()) {
                    return bad("HTTP endpoints need base_url".into());
                }
                if self.model_name.as_deref().is_none_or(|m| m.trim().is_empty()) {
                    return bad("HTTP endpoints need model_name".into());
                }
                if !(0.1..=0.3).contains(&delay) {
                    return bad(format!("inter_request_delay {delay} is outside [0.1, 0.3] s"));
                }
            }
            EndpointKind::Simulator => match &self.simulator {
                Some(p) => p.validate().map_err(|m| GatewayError::Config(format!("{}: {m}", self.id)))?,
                None => return bad("simulator endpoints need a simulator profile".into()),
            },
        }
        Ok(())
    }

    /// Builds the backend. HTTP endpoints read their key from the environment
    /// here, so a missing key fails before any request is sent.
    pub fn backend(&self, cases: Option<Arc<CaseIndex>>) -> Result<Arc<dyn ChatBackend>, GatewayError> {
        self.validate()?;
        Ok(match self.kind {
            EndpointKind::HttpChat => Arc::new(HttpChat::from_endpoint(self)?),
            EndpointKind::Simulator => {
                let profile = self.simulator.clone().expect("validated");
                Arc::new(Simulator::new(profile, cases))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

/// Per-endpoint client: at most `max_in_flight` outstanding requests, request
/// starts spaced by the inter-request delay, retries per [`RetryPolicy`].
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    slots: Semaphore,
    next_start: Mutex<Option<tokio::time::Instant>>,
    delay: Duration,
    retry: RetryPolicy,
    decode: DecodeConfig,
}

impl Gateway {
    pub fn new(
        backend: Arc<dyn ChatBackend>,
        max_in_flight: usize,
        inter_request_delay: Duration,
        retry: RetryPolicy,
        decode: DecodeConfig,
    ) -> Gateway {
        Gateway {
            backend,
            slots: Semaphore::new(max_in_flight.max(1)),
            next_start: Mutex::new(None),
            delay: inter_request_delay,
            retry,
            decode,
        }
    }

    pub fn for_endpoint(
        endpoint: &ModelEndpoint,
        cases: Option<Arc<CaseIndex>>,
        retry: RetryPolicy,
        decode: DecodeConfig,
    ) -> Result<Gateway, GatewayError> {
        let backend = endpoint.backend(cases)?;
        Ok(Gateway::new(
            backend,
            endpoint.in_flight(),
            Duration::from_secs_f64(endpoint.delay_secs()),
            retry,
            decode,
        ))
    }

    async fn pace(&self) {
        if self.delay.is_zero() {
            return;
        }
        let start = {
            let mut next = self.next_start.lock().await;
            let now = tokio::time::Instant::now();
            let start = next.map_or(now, |n| n.max(now));
            *next = Some(start + self.delay);
            start
        };
        tokio::time::sleep_until(start).await;
    }

    fn usable(&self, text: &str) -> bool {
        text.trim().chars().count() >= self.retry.min_response_chars
    }

    /// Sends `messages`, retrying empty or short responses, transport errors,
    /// HTTP 429 and 5xx. Credential rejections fail immediately.
    pub async fn complete(&self, messages: &[Message]) -> Result<Completion, GatewayError> {
        let _slot = self.slots.acquire().await.expect("semaphore never closed");
        let started = Instant::now();
        let mut attempts = 0;
        let mut last_status;
        let mut last_error;
        let mut last_text = String::new();
        loop {
            self.pace().await;
            attempts += 1;
            match self.backend.send(messages, &self.decode).await {
                Ok(text) if self.usable(&text) => {
                    return Ok(Completion {
                        text,
                        attempts,
                        latency_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Ok(text) => {
                    last_status = Some(200);
                    last_error = format!("response too short ({} chars)", text.trim().chars().count());
                    last_text = text;
                }
                Err(e) => {
                    last_status = e.status();
                    last_error = e.describe();
                    if let BackendError::Status { body, .. } = &e {
                        last_text = body.clone();
                    }
                    match e.status() {
                        Some(401 | 403) => return Err(GatewayError::Auth { status: e.status().unwrap_or(401) }),
                        Some(code) if (400..500).contains(&code) && code != 429 => break,
                        _ => {}
                    }
                }
            }
            if attempts > self.retry.max_retries {
                break;
            }
            log::debug!("retrying after attempt {attempts}: {last_error}");
            tokio::time::sleep(self.retry.backoff(attempts - 1)).await;
        }
        Err(GatewayError::PersistentFailure { attempts, last_status, last_error, last_text })
    }
}
