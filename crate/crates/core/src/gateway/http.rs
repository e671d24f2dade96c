use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, DecodeConfig, GatewayError, ModelEndpoint};
use crate::strategy::Message;

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Text of `choices[0].message.content` from a chat-completion response body.
/// A null content decodes as the empty string.
pub fn decode_chat_response(body: &[u8]) -> Result<String, GatewayError> {
    let r: ChatResponse = serde_json::from_slice(body).map_err(|e| GatewayError::Decode(e.to_string()))?;
    let first = r
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::Decode("response has no choices".into()))?;
    Ok(first.message.content.unwrap_or_default())
}

/// Chat-completion-compatible HTTP backend.
pub struct HttpChat {
    client: reqwest::Client,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl fmt::Debug for HttpChat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpChat")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpChat {
    pub fn from_endpoint(endpoint: &ModelEndpoint) -> Result<HttpChat, GatewayError> {
        let base = endpoint
            .base_url
            .as_deref()
            .ok_or_else(|| GatewayError::Config(format!("{}: missing base_url", endpoint.id)))?;
        let model = endpoint
            .model_name
            .clone()
            .ok_or_else(|| GatewayError::Config(format!("{}: missing model_name", endpoint.id)))?;
        let api_key = match &endpoint.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Config(format!("{}: environment variable {var} is not set", endpoint.id))
            })?),
            None => None,
        };
        let timeout = Duration::from_secs_f64(endpoint.timeout_secs.unwrap_or(120.0));
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpChat {
            client,
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model,
            api_key,
        })
    }
}

#[async_trait]
impl ChatBackend for HttpChat {
    async fn send(&self, messages: &[Message], decode: &DecodeConfig) -> Result<String, BackendError> {
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature: decode.temperature,
            max_tokens: decode.max_tokens,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        let status = resp.status();
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                code: status.as_u16(),
                body: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
        decode_chat_response(&bytes).map_err(|e| BackendError::Decode(e.to_string()))
    }
}
