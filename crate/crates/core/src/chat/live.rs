//! Blocking HTTP client for chat-completion endpoints.
//!
//! Wire shape: POST a JSON document with the model name and the ordered
//! role/content message list; the first choice's message content is the
//! reply. The bearer token comes from the `IEXTRACT_API_TOKEN` environment
//! variable and is never persisted anywhere. Decoding is pinned to the most
//! deterministic settings the endpoint offers (temperature 0), best-effort.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::clock::Clock;
use super::rate_limit::RateLimiter;
use super::{ChatError, ChatMessage};

pub const TOKEN_ENV_VAR: &str = "IEXTRACT_API_TOKEN";

const BACKOFF_BASE_MS: u64 = 250;
const BACKOFF_CAP_MS: u64 = 8_000;

pub struct LiveClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    token: Option<String>,
    max_retries: u32,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    requests: AtomicU64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

enum SendError {
    Retryable(String),
    Fatal(String),
}

impl LiveClient {
    pub fn new(
        endpoint: String,
        model: String,
        request_timeout: Duration,
        max_retries: u32,
        rate_limit_per_minute: u32,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(request_timeout))
            .http_status_as_error(false)
            .build();
        LiveClient {
            agent: config.into(),
            endpoint,
            model,
            token: std::env::var(TOKEN_ENV_VAR).ok(),
            max_retries,
            limiter: RateLimiter::new(rate_limit_per_minute, Arc::clone(&clock)),
            clock,
            requests: AtomicU64::new(0),
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Send the conversation and return the assistant reply, retrying
    /// transient failures with capped exponential backoff plus jitter. An
    /// empty reply is retried once, then surfaced.
    pub fn chat(&self, messages: &[ChatMessage]) -> Result<String, ChatError> {
        let mut attempt: u32 = 0;
        let mut empty_retried = false;
        loop {
            self.limiter.acquire()?;
            self.requests.fetch_add(1, Ordering::Relaxed);
            match self.send(messages) {
                Ok(reply) if reply.trim().is_empty() => {
                    if empty_retried {
                        return Err(ChatError::EmptyReply);
                    }
                    empty_retried = true;
                }
                Ok(reply) => return Ok(reply),
                Err(SendError::Retryable(message)) => {
                    if attempt >= self.max_retries {
                        return Err(ChatError::Transport { message });
                    }
                    attempt += 1;
                    self.clock.sleep_ms(self.backoff_ms(attempt));
                }
                Err(SendError::Fatal(message)) => return Err(ChatError::Transport { message }),
            }
        }
    }

    fn backoff_ms(&self, attempt: u32) -> u64 {
        let base = BACKOFF_BASE_MS.saturating_mul(1 << attempt.min(16)).min(BACKOFF_CAP_MS);
        // Cheap multiplicative-hash jitter; nothing downstream depends on it.
        let jitter = (self.clock.now_ms().wrapping_mul(2654435761)) % BACKOFF_BASE_MS;
        base + jitter
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, SendError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": messages,
        });
        let mut request = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| SendError::Retryable(format!("request failed: {e}")))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(SendError::Retryable(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(SendError::Fatal(format!("endpoint returned {status}")));
        }
        let parsed: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| SendError::Fatal(format!("malformed completion response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| SendError::Fatal("completion response has no choices".into()))
    }
}
