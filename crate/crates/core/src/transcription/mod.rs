//! Speech-to-text stage. A [`Transcriber`] wraps one backend behind the
//! [`SpeechToText`] trait: either the remote multipart API client or the
//! offline fixture registry keyed by audio digest.

mod fixture;
mod remote;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioClip, TRANSCRIPTION_RATE_HZ};
use crate::digest::ContentDigest;
use crate::http::{CallError, NetworkOptions};

pub use fixture::{FixtureTranscriber, RegistryError};
pub use remote::RemoteTranscriber;

pub const DEFAULT_LANGUAGE_HINT: &str = "id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    RemoteApi,
    Fixture,
}

fn default_language_hint() -> String {
    DEFAULT_LANGUAGE_HINT.to_string()
}

fn default_timeout_s() -> f64 {
    60.0
}

fn default_max_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptionBackendDescriptor {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_language_hint")]
    pub language_hint: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Registry file for the fixture backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
}

impl TranscriptionBackendDescriptor {
    pub fn fixture(fixture_path: Option<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Fixture,
            endpoint_url: String::new(),
            model_name: "fixture".into(),
            language_hint: default_language_hint(),
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
            language_hint: default_language_hint(),
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            fixture_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.kind == BackendKind::RemoteApi && self.endpoint_url.trim().is_empty() {
            return Err("remote transcription backend needs an endpoint_url".into());
        }
        if self.timeout_s.is_nan() || self.timeout_s < 1.0 {
            return Err(format!("timeout_s must be at least 1, got {}", self.timeout_s));
        }
        if self.language_hint.trim().is_empty() {
            return Err("language_hint must not be empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    pub language: String,
    pub audio_duration_s: f64,
    pub latency_s: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptionError {
    #[error("transcription backend unreachable after {attempts} attempt(s): {reason}")]
    BackendUnreachable { attempts: u32, reason: String },
    #[error("transcription backend rejected the request{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    BackendRejected { status: Option<u16>, message: String },
    #[error("transcription backend returned an empty transcript")]
    EmptyTranscript,
    #[error("invalid transcription input: {0}")]
    InvalidInput(String),
    #[error("transcription backend misconfigured: {0}")]
    Config(String),
}

impl TranscriptionError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::BackendUnreachable { .. } => "backend_unreachable",
            Self::BackendRejected { .. } => "backend_rejected",
            Self::EmptyTranscript => "empty_transcript",
            Self::InvalidInput(_) => "invalid_input",
            Self::Config(_) => "config",
        }
    }
}

impl From<CallError> for TranscriptionError {
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

/// What a backend is handed for one clip.
#[derive(Debug)]
pub struct SpeechRequest<'a> {
    pub wav: &'a [u8],
    pub digest: &'a ContentDigest,
    pub model: &'a str,
    pub language_hint: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizedSpeech {
    pub text: String,
    /// Language reported by the backend, when it reports one.
    pub language: Option<String>,
}

#[async_trait]
pub trait SpeechToText: Send + Sync {
    async fn recognize(&self, request: &SpeechRequest<'_>) -> Result<RecognizedSpeech, TranscriptionError>;
}

pub struct Transcriber {
    descriptor: TranscriptionBackendDescriptor,
    backend: Arc<dyn SpeechToText>,
}

impl std::fmt::Debug for Transcriber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transcriber")
            .field("descriptor", &self.descriptor)
            .finish_non_exhaustive()
    }
}

impl Transcriber {
    /// Builds the backend named by the descriptor. Fixture backends load
    /// their registry file when one is configured.
    pub fn from_descriptor(
        descriptor: TranscriptionBackendDescriptor,
        network: &NetworkOptions,
    ) -> Result<Self, TranscriptionError> {
        descriptor.validate().map_err(TranscriptionError::Config)?;
        let backend: Arc<dyn SpeechToText> = match descriptor.kind {
            BackendKind::Fixture => {
                let registry = match &descriptor.fixture_path {
                    Some(path) => {
                        FixtureTranscriber::load(path).map_err(|e| TranscriptionError::Config(e.to_string()))?
                    }
                    None => FixtureTranscriber::new(),
                };
                Arc::new(registry)
            }
            BackendKind::RemoteApi => Arc::new(RemoteTranscriber::new(&descriptor, network)?),
        };
        Ok(Self { descriptor, backend })
    }

    pub fn with_backend(descriptor: TranscriptionBackendDescriptor, backend: Arc<dyn SpeechToText>) -> Self {
        Self { descriptor, backend }
    }

    pub fn descriptor(&self) -> &TranscriptionBackendDescriptor {
        &self.descriptor
    }

    /// Transcribes a 16 kHz clip. `latency_s` covers the backend call only.
    pub async fn transcribe(&self, clip: &AudioClip) -> Result<Transcript, TranscriptionError> {
        if clip.sample_rate_hz() != TRANSCRIPTION_RATE_HZ {
            return Err(TranscriptionError::InvalidInput(format!(
                "clip is {} Hz, backends expect {} Hz",
                clip.sample_rate_hz(),
                TRANSCRIPTION_RATE_HZ
            )));
        }
        let wav = clip.to_wav();
        let digest = ContentDigest::of_bytes(&wav);
        let request = SpeechRequest {
            wav: &wav,
            digest: &digest,
            model: &self.descriptor.model_name,
            language_hint: &self.descriptor.language_hint,
        };

        let started = Instant::now();
        let recognized = self.backend.recognize(&request).await;
        let latency_s = started.elapsed().as_secs_f64();
        let recognized = recognized?;

        if recognized.text.trim().is_empty() {
            return Err(TranscriptionError::EmptyTranscript);
        }
        let language = recognized
            .language
            .filter(|l| !l.trim().is_empty())
            .unwrap_or_else(|| self.descriptor.language_hint.clone());
        Ok(Transcript {
            text: recognized.text,
            language,
            audio_duration_s: clip.duration_s(),
            latency_s,
        })
    }
}
