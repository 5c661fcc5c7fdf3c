//! Service configuration file (UTF-8 JSON). Relative paths resolve against
//! the directory holding the file. Only API tokens come from the environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cost::PriceConfig;
use crate::audio::QualityPolicy;
use crate::form_mapper::{load_mapping, FieldMapping, MappingError};
use crate::http::NetworkOptions;
use crate::summarizer::{PromptConfig, SummarizerBackendDescriptor, DEFAULT_PROMPT_VERSION};
use crate::transcription::TranscriptionBackendDescriptor;

pub const DEFAULT_CONCURRENCY_LIMIT: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Dev,
    Clinic,
}

impl Profile {
    /// Development keeps uploads for debugging; clinics drop them once
    /// transcribed.
    pub fn default_retain_audio(self) -> bool {
        matches!(self, Profile::Dev)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} does not parse: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("mapping {path}: {source}")]
    Mapping {
        path: PathBuf,
        #[source]
        source: MappingError,
    },
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

fn default_concurrency_limit() -> usize {
    DEFAULT_CONCURRENCY_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    pub transcription: TranscriptionBackendDescriptor,
    pub summarizer: SummarizerBackendDescriptor,
    /// System prompt template; the built-in one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_path: Option<PathBuf>,
    #[serde(default)]
    pub prices: PriceConfig,
    #[serde(default)]
    pub quality_policy: QualityPolicy,
    /// Mapping file; the shipped placeholder mapping when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping_path: Option<PathBuf>,
    #[serde(default = "default_concurrency_limit")]
    pub concurrency_limit: usize,
    /// Defaults from the profile when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retain_audio: Option<bool>,
    #[serde(default)]
    pub network: NetworkOptions,
}

impl ServiceConfig {
    /// Fixture backends everywhere, data under `data_dir`.
    pub fn fixture(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            profile: Profile::Dev,
            data_dir: data_dir.into(),
            transcription: TranscriptionBackendDescriptor::fixture(None),
            summarizer: SummarizerBackendDescriptor::fixture(None),
            prompt_path: None,
            prices: PriceConfig::default(),
            quality_policy: QualityPolicy::default(),
            mapping_path: None,
            concurrency_limit: DEFAULT_CONCURRENCY_LIMIT,
            retain_audio: None,
            network: NetworkOptions::default(),
        }
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.data_dir);
        for p in [
            self.prompt_path.as_mut(),
            self.mapping_path.as_mut(),
            self.transcription.fixture_path.as_mut(),
            self.summarizer.fixture_path.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = ConfigError::Invalid;
        self.transcription.validate().map_err(invalid)?;
        self.summarizer.validate().map_err(invalid)?;
        self.prices.validate().map_err(invalid)?;
        self.quality_policy.validate().map_err(invalid)?;
        if self.concurrency_limit == 0 {
            return Err(invalid("concurrency_limit must be at least 1".into()));
        }
        Ok(())
    }

    pub fn retain_audio(&self) -> bool {
        self.retain_audio.unwrap_or(self.profile.default_retain_audio())
    }

    pub fn load_mapping(&self) -> Result<FieldMapping, ConfigError> {
        match &self.mapping_path {
            None => Ok(FieldMapping::default_mapping()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_mapping(&text).map_err(|source| ConfigError::Mapping {
                    path: path.clone(),
                    source,
                })
            }
        }
    }

    pub fn load_prompt(&self) -> Result<PromptConfig, ConfigError> {
        match &self.prompt_path {
            None => Ok(PromptConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                let version = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| DEFAULT_PROMPT_VERSION.to_string());
                PromptConfig::with_system_prompt(version, text).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }
}
