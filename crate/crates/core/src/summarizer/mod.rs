//! Summarization stage: prompt construction, the chat-completion call, JSON
//! recovery from free-form replies and strict validation into a
//! [`MedicalSummary`].

mod fixture;
mod prompt;
mod recover;
mod remote;
mod schema;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{CallError, NetworkOptions};
use crate::transcription::{BackendKind, Transcript};

pub use fixture::{FixtureChat, FixtureReply};
pub use prompt::{
    build_prompt, PromptBundle, PromptConfig, DEFAULT_MAX_TOKENS, DEFAULT_PROMPT_VERSION, DEFAULT_TEMPERATURE,
    REASK_INSTRUCTION,
};
pub use recover::{recover_json, NoJsonObjectFound};
pub use remote::RemoteChat;
pub use schema::{is_fallback, validate_summary, MedicalSummary, SchemaError, SummaryField, FALLBACK_PHRASE};

fn default_timeout_s() -> f64 {
    60.0
}

fn default_max_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizerBackendDescriptor {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Registry file for the fixture backend, keyed by transcript digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
}

impl SummarizerBackendDescriptor {
    pub fn fixture(fixture_path: Option<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Fixture,
            endpoint_url: String::new(),
            model_name: "fixture".into(),
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            api_key_env: None,
            fixture_path,
        }
    }

    pub fn remote(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::RemoteApi,
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            fixture_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.kind == BackendKind::RemoteApi && self.endpoint_url.trim().is_empty() {
            return Err("remote summarizer backend needs an endpoint_url".into());
        }
        if self.timeout_s.is_nan() || self.timeout_s < 1.0 {
            return Err(format!("timeout_s must be at least 1, got {}", self.timeout_s));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummarizerError {
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("summarizer backend unreachable after {attempts} attempt(s): {reason}")]
    BackendUnreachable { attempts: u32, reason: String },
    #[error("summarizer backend rejected the request{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    BackendRejected { status: Option<u16>, message: String },
    #[error("no valid summary after {attempts} backend call(s): {reason}")]
    SummaryInvalid { attempts: u32, reason: String },
    #[error("summarizer misconfigured: {0}")]
    Config(String),
}

impl SummarizerError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyTranscript => "empty_transcript",
            Self::BackendUnreachable { .. } => "backend_unreachable",
            Self::BackendRejected { .. } => "backend_rejected",
            Self::SummaryInvalid { .. } => "summary_invalid",
            Self::Config(_) => "config",
        }
    }
}

impl From<CallError> for SummarizerError {
    fn from(e: CallError) -> Self {
        match e {
            CallError::Unreachable { attempts, reason } => Self::BackendUnreachable { attempts, reason },
            CallError::Rejected { status, body } => Self::BackendRejected {
                status: Some(status),
                message: body,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Chat-completion request body, serialized as sent on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn from_bundle(model: &str, bundle: &PromptBundle) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: bundle.system_prompt.clone(),
                },
                ChatMessage {
                    role: Role::User,
                    content: bundle.user_content.clone(),
                },
            ],
            max_tokens: bundle.max_tokens,
            temperature: bundle.temperature,
        }
    }

    /// The first user message: the transcript.
    pub fn transcript(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    fn prompt_chars(&self) -> usize {
        self.messages.iter().map(|m| m.content.chars().count()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub content: String,
    pub usage: Option<ReportedUsage>,
}

#[async_trait]
pub trait ChatCompletion: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatReply, SummarizerError>;
}

/// Tokens billed for a summarization, summed over every backend call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// True when at least one call had no usage report and was estimated
    /// as ⌈characters / 4⌉.
    pub estimated: bool,
}

pub fn estimate_tokens(chars: usize) -> u64 {
    (chars as u64).div_ceil(4)
}

impl TokenUsage {
    fn add_call(&mut self, request: &ChatRequest, reply: &ChatReply) {
        match reply.usage {
            Some(u) => {
                self.input_tokens += u.prompt_tokens;
                self.output_tokens += u.completion_tokens;
            }
            None => {
                self.input_tokens += estimate_tokens(request.prompt_chars());
                self.output_tokens += estimate_tokens(reply.content.chars().count());
                self.estimated = true;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryOutcome {
    pub summary: MedicalSummary,
    /// Wall-clock seconds spent inside backend calls.
    pub latency_s: f64,
    pub usage: TokenUsage,
    pub backend_calls: u32,
}

fn parse_reply(content: &str) -> Result<MedicalSummary, String> {
    let candidate = recover_json(content).map_err(|e| e.to_string())?;
    validate_summary(candidate).map_err(|e| e.to_string())
}

pub struct Summarizer {
    descriptor: SummarizerBackendDescriptor,
    prompt: PromptConfig,
    backend: Arc<dyn ChatCompletion>,
}

impl std::fmt::Debug for Summarizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Summarizer")
            .field("descriptor", &self.descriptor)
            .field("prompt_version", &self.prompt.version)
            .finish_non_exhaustive()
    }
}

impl Summarizer {
    pub fn from_descriptor(
        descriptor: SummarizerBackendDescriptor,
        prompt: PromptConfig,
        network: &NetworkOptions,
    ) -> Result<Self, SummarizerError> {
        descriptor.validate().map_err(SummarizerError::Config)?;
        prompt.validate()?;
        let backend: Arc<dyn ChatCompletion> = match descriptor.kind {
            BackendKind::Fixture => Arc::new(match &descriptor.fixture_path {
                Some(path) => FixtureChat::load(path)?,
                None => FixtureChat::new(),
            }),
            BackendKind::RemoteApi => Arc::new(RemoteChat::new(&descriptor, network)?),
        };
        Ok(Self {
            descriptor,
            prompt,
            backend,
        })
    }

    pub fn with_backend(
        descriptor: SummarizerBackendDescriptor,
        prompt: PromptConfig,
        backend: Arc<dyn ChatCompletion>,
    ) -> Self {
        Self {
            descriptor,
            prompt,
            backend,
        }
    }

    pub fn prompt(&self) -> &PromptConfig {
        &self.prompt
    }

    /// Builds the prompt, calls the backend and validates the reply. A reply
    /// that fails recovery or validation gets exactly one re-ask carrying
    /// [`REASK_INSTRUCTION`]; a second failure is [`SummarizerError::SummaryInvalid`].
    pub async fn summarize(&self, transcript: &Transcript) -> Result<SummaryOutcome, SummarizerError> {
        let bundle = build_prompt(transcript, &self.prompt)?;
        let mut request = ChatRequest::from_bundle(&self.descriptor.model_name, &bundle);
        let mut usage = TokenUsage::default();
        let mut latency_s = 0.0;
        let mut calls = 0u32;

        loop {
            let started = Instant::now();
            let reply = self.backend.complete(&request).await;
            latency_s += started.elapsed().as_secs_f64();
            calls += 1;
            let reply = reply?;
            usage.add_call(&request, &reply);

            match parse_reply(&reply.content) {
                Ok(summary) => {
                    return Ok(SummaryOutcome {
                        summary,
                        latency_s,
                        usage,
                        backend_calls: calls,
                    })
                }
                Err(reason) if calls >= 2 => {
                    return Err(SummarizerError::SummaryInvalid {
                        attempts: calls,
                        reason,
                    });
                }
                Err(reason) => {
                    tracing::warn!(%reason, "summary reply invalid, asking again");
                    request.messages.push(ChatMessage {
                        role: Role::Assistant,
                        content: reply.content,
                    });
                    request.messages.push(ChatMessage {
                        role: Role::User,
                        content: REASK_INSTRUCTION.to_string(),
                    });
                }
            }
        }
    }
}
