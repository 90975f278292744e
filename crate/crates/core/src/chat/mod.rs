//! Multi-turn conversations over interchangeable backends.
//!
//! One [`Conversation`] per input sample carries the dialogue context that
//! lets follow-up questions omit the sentence. The [`Backend`] decides where
//! replies come from: a live HTTP endpoint, a recorded transcript store
//! (replay never falls through to the network), a gold-annotation oracle, or
//! a scripted function for fixtures and tests. Any backend can additionally
//! record its turns to a transcript store for later replay.

mod clock;
mod live;
mod oracle;
mod rate_limit;
mod transcript;

pub use clock::{Clock, FakeClock, SystemClock};
pub use live::{LiveClient, TOKEN_ENV_VAR};
pub use oracle::oracle_reply;
pub use rate_limit::RateLimiter;
pub use transcript::{transcript_key, TranscriptStore, TranscriptWriter, TRANSCRIPT_VERSION};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::TaskSchema;
use crate::templates::RenderedPrompt;
use crate::types::Sample;

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

/// Ordered message history for one sample. After any leading system message
/// the roles strictly alternate user/assistant; a fresh sample always starts
/// a fresh conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    id: String,
    messages: Vec<ChatMessage>,
}

impl Conversation {
    pub fn new(id: impl Into<String>) -> Self {
        Conversation {
            id: id.into(),
            messages: Vec::new(),
        }
    }

    /// Start a conversation with a leading system message (used when the
    /// type-filtering stage is skipped and no user turn carries the
    /// sentence).
    pub fn with_system(id: impl Into<String>, content: impl Into<String>) -> Self {
        Conversation {
            id: id.into(),
            messages: vec![ChatMessage {
                role: Role::System,
                content: content.into(),
            }],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    fn push(&mut self, role: Role, content: String) -> Result<(), ChatError> {
        if content.is_empty() {
            return Err(ChatError::Protocol(format!(
                "{role:?} message must be non-empty"
            )));
        }
        let expected = match self.messages.last() {
            None => Role::User,
            Some(m) if m.role == Role::System => Role::User,
            Some(m) if m.role == Role::User => Role::Assistant,
            Some(_) => Role::User,
        };
        if role != expected {
            return Err(ChatError::Protocol(format!(
                "conversation {}: expected next role {expected:?}, got {role:?}",
                self.id
            )));
        }
        self.messages.push(ChatMessage { role, content });
        Ok(())
    }

    pub fn push_user(&mut self, content: impl Into<String>) -> Result<(), ChatError> {
        self.push(Role::User, content.into())
    }

    pub fn push_assistant(&mut self, content: impl Into<String>) -> Result<(), ChatError> {
        self.push(Role::Assistant, content.into())
    }
}

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("transport failure: {message}")]
    Transport { message: String },
    #[error("rate limit budget exhausted")]
    RateLimited,
    #[error("no transcript entry for key {key}")]
    ReplayMiss { key: String },
    #[error("assistant reply was empty")]
    EmptyReply,
    #[error("unsupported answer form: {0}")]
    UnsupportedForm(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("transcript store: {0}")]
    Transcript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
    GoldOracle,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_retries() -> u32 {
    3
}

fn default_rate_limit() -> u32 {
    60
}

/// Declarative backend configuration, loadable from run config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_rate_limit")]
    pub rate_limit_per_minute: u32,
    /// Replay source, or record sink when `record` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub record: bool,
}

impl BackendConfig {
    pub fn live(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Live,
            endpoint: Some(endpoint.into()),
            model_name: Some(model_name.into()),
            request_timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            rate_limit_per_minute: default_rate_limit(),
            transcript_path: None,
            record: false,
        }
    }

    pub fn replay(transcript_path: impl Into<PathBuf>) -> Self {
        BackendConfig {
            kind: BackendKind::Replay,
            endpoint: None,
            model_name: None,
            request_timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            rate_limit_per_minute: default_rate_limit(),
            transcript_path: Some(transcript_path.into()),
            record: false,
        }
    }

    pub fn gold_oracle() -> Self {
        BackendConfig {
            kind: BackendKind::GoldOracle,
            endpoint: None,
            model_name: None,
            request_timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            rate_limit_per_minute: default_rate_limit(),
            transcript_path: None,
            record: false,
        }
    }

    pub fn recording(mut self, transcript_path: impl Into<PathBuf>) -> Self {
        self.transcript_path = Some(transcript_path.into());
        self.record = true;
        self
    }

    pub fn validate(&self) -> Result<(), ChatError> {
        match self.kind {
            BackendKind::Live => {
                if self.endpoint.is_none() || self.model_name.is_none() {
                    return Err(ChatError::Protocol(
                        "live backend requires endpoint and model_name".into(),
                    ));
                }
            }
            BackendKind::Replay => {
                if self.transcript_path.is_none() {
                    return Err(ChatError::Protocol(
                        "replay backend requires transcript_path".into(),
                    ));
                }
                if self.record {
                    return Err(ChatError::Protocol(
                        "replay backend cannot also record".into(),
                    ));
                }
                if self.endpoint.is_some() {
                    return Err(ChatError::Protocol(
                        "replay backend must not name a live endpoint".into(),
                    ));
                }
            }
            BackendKind::GoldOracle => {}
        }
        if self.record && self.transcript_path.is_none() {
            return Err(ChatError::Protocol(
                "recording requires transcript_path".into(),
            ));
        }
        Ok(())
    }
}

/// Reply function for the scripted test backend.
pub type ScriptFn = Arc<dyn Fn(&Sample, &Conversation, &RenderedPrompt) -> Option<String> + Send + Sync>;

enum BackendInner {
    Live(LiveClient),
    Replay(TranscriptStore),
    GoldOracle,
    Scripted(ScriptFn),
}

/// A reply source shared by all workers of a run. Per-sample state lives in
/// [`Session`]s created from it.
pub struct Backend {
    inner: BackendInner,
    recorder: Option<TranscriptWriter>,
    fingerprint: String,
}

impl Backend {
    pub fn from_config(config: &BackendConfig, clock: Arc<dyn Clock>) -> Result<Self, ChatError> {
        config.validate()?;
        let (inner, fingerprint) = match config.kind {
            BackendKind::Live => {
                let endpoint = config.endpoint.clone().expect("validated");
                let model = config.model_name.clone().expect("validated");
                let client = LiveClient::new(
                    endpoint,
                    model.clone(),
                    Duration::from_millis(config.request_timeout_ms),
                    config.max_retries,
                    config.rate_limit_per_minute,
                    clock,
                );
                (BackendInner::Live(client), model)
            }
            BackendKind::Replay => {
                let store = TranscriptStore::load(config.transcript_path.as_ref().expect("validated"))?;
                let fingerprint = store.model().to_string();
                (BackendInner::Replay(store), fingerprint)
            }
            BackendKind::GoldOracle => (BackendInner::GoldOracle, "gold-oracle".to_string()),
        };
        let recorder = if config.record {
            let path = config.transcript_path.as_ref().expect("validated");
            Some(TranscriptWriter::create(path, &fingerprint)?)
        } else {
            None
        };
        Ok(Backend {
            inner,
            recorder,
            fingerprint,
        })
    }

    /// A backend that answers from a fixed function; used to build fixtures
    /// and to exercise the pipeline without a network.
    pub fn scripted(fingerprint: impl Into<String>, script: ScriptFn) -> Self {
        Backend {
            inner: BackendInner::Scripted(script),
            recorder: None,
            fingerprint: fingerprint.into(),
        }
    }

    /// Attach a fresh transcript store recording every turn.
    pub fn with_recorder(mut self, path: impl Into<PathBuf>) -> Result<Self, ChatError> {
        self.recorder = Some(TranscriptWriter::create(path.into(), &self.fingerprint)?);
        Ok(self)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Requests actually sent to a live endpoint (0 for other kinds).
    pub fn request_count(&self) -> u64 {
        match &self.inner {
            BackendInner::Live(client) => client.request_count(),
            _ => 0,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recorder.is_some()
    }

    /// Start a per-sample session. Each session owns its conversation turn
    /// flow; the backend only shares the rate limiter and transcript writer.
    pub fn session<'b>(&'b self, sample: &'b Sample, schema: &'b TaskSchema) -> Session<'b> {
        Session {
            backend: self,
            sample,
            schema,
            first_key: None,
        }
    }
}

/// Per-sample view of a backend: appends the question and the reply to the
/// conversation and returns the reply verbatim.
pub struct Session<'b> {
    backend: &'b Backend,
    sample: &'b Sample,
    schema: &'b TaskSchema,
    first_key: Option<String>,
}

impl Session<'_> {
    pub fn ask(
        &mut self,
        conversation: &mut Conversation,
        prompt: &RenderedPrompt,
    ) -> Result<String, ChatError> {
        conversation.push_user(prompt.text.clone())?;
        let key = transcript_key(&self.backend.fingerprint, conversation.messages());
        let reply = match &self.backend.inner {
            BackendInner::Live(client) => client.chat(conversation.messages())?,
            BackendInner::Replay(store) => store
                .lookup(&key)
                .map(str::to_string)
                .ok_or(ChatError::ReplayMiss { key: key.clone() })?,
            BackendInner::GoldOracle => {
                let gold = self.sample.gold.as_ref().ok_or_else(|| {
                    ChatError::Protocol(format!(
                        "gold_oracle backend needs a gold annotation for sample '{}'",
                        self.sample.id
                    ))
                })?;
                oracle_reply(self.schema, gold, prompt)?
            }
            BackendInner::Scripted(script) => {
                script(self.sample, conversation, prompt).ok_or_else(|| {
                    ChatError::Protocol(format!(
                        "scripted backend has no reply for sample '{}' prompt '{}'",
                        self.sample.id, prompt.template_id
                    ))
                })?
            }
        };
        if reply.trim().is_empty() {
            return Err(ChatError::EmptyReply);
        }
        if let Some(writer) = &self.backend.recorder {
            writer.append(&key, conversation.messages(), &reply)?;
        }
        conversation.push_assistant(reply.clone())?;
        self.first_key.get_or_insert(key);
        Ok(reply)
    }

    /// Key of the conversation's first turn; identifies it in a transcript
    /// store.
    pub fn transcript_ref(&self) -> Option<&str> {
        match &self.backend.inner {
            BackendInner::Replay(_) => self.first_key.as_deref(),
            _ if self.backend.recorder.is_some() => self.first_key.as_deref(),
            _ => None,
        }
    }
}
