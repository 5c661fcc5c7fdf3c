use std::collections::BTreeMap;
use std::path::Path;
use std::sync::RwLock;

use async_trait::async_trait;
use thiserror::Error;

use super::{RecognizedSpeech, SpeechRequest, SpeechToText, TranscriptionError};
use crate::digest::ContentDigest;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("digest {0} is already registered")]
    DuplicateDigest(ContentDigest),
    #[error("fixture text for {0} is empty")]
    EmptyText(ContentDigest),
    #[error("cannot read fixture registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture registry {path} is not valid: {message}")]
    Parse { path: String, message: String },
}

/// Deterministic transcription backend: a map from the SHA-256 of a clip's
/// canonical WAV rendering to the transcript text. Serialized as a JSON
/// object `{ "<digest>": "<text>", … }`.
#[derive(Debug, Default)]
pub struct FixtureTranscriber {
    entries: RwLock<BTreeMap<ContentDigest, String>>,
}

impl FixtureTranscriber {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, RegistryError> {
        let raw: BTreeMap<ContentDigest, String> = serde_json::from_str(text).map_err(|e| RegistryError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let registry = Self::new();
        for (digest, text) in raw {
            registry.register(digest, text)?;
        }
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let entries = self.entries.read().expect("fixture registry lock poisoned");
        serde_json::to_string_pretty(&*entries).expect("string map serializes")
    }

    pub fn register(&self, digest: ContentDigest, text: impl Into<String>) -> Result<(), RegistryError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(RegistryError::EmptyText(digest));
        }
        let mut entries = self.entries.write().expect("fixture registry lock poisoned");
        if entries.contains_key(&digest) {
            return Err(RegistryError::DuplicateDigest(digest));
        }
        entries.insert(digest, text);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("fixture registry lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[async_trait]
impl SpeechToText for FixtureTranscriber {
    async fn recognize(&self, request: &SpeechRequest<'_>) -> Result<RecognizedSpeech, TranscriptionError> {
        let entries = self.entries.read().expect("fixture registry lock poisoned");
        match entries.get(request.digest) {
            Some(text) => Ok(RecognizedSpeech {
                text: text.clone(),
                language: None,
            }),
            None => Err(TranscriptionError::BackendRejected {
                status: None,
                message: format!("no fixture for digest {}", request.digest),
            }),
        }
    }
}
