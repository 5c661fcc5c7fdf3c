use serde::{Deserialize, Serialize};

use super::schema::{SummaryField, FALLBACK_PHRASE};
use super::SummarizerError;
use crate::transcription::Transcript;

pub const DEFAULT_PROMPT_VERSION: &str = "summary_system.v1";
const DEFAULT_SYSTEM_PROMPT: &str = include_str!("../../prompts/summary_system.v1.txt");

pub const DEFAULT_MAX_TOKENS: u32 = 500;
pub const DEFAULT_TEMPERATURE: f64 = 0.2;

/// Sent after a reply that could not be validated.
pub const REASK_INSTRUCTION: &str =
    "Return only the JSON object with the eight required keys and string values, with no other text.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub version: String,
    pub system_prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            version: DEFAULT_PROMPT_VERSION.to_string(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

impl PromptConfig {
    /// Uses a custom system prompt. The template must name each of the eight
    /// keys exactly once and carry the fallback phrase.
    pub fn with_system_prompt(
        version: impl Into<String>,
        system_prompt: impl Into<String>,
    ) -> Result<Self, SummarizerError> {
        let config = Self {
            version: version.into(),
            system_prompt: system_prompt.into(),
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SummarizerError> {
        let invalid = |msg: String| Err(SummarizerError::Config(msg));
        if self.version.trim().is_empty() {
            return invalid("prompt version must not be empty".into());
        }
        for field in SummaryField::ALL {
            let count = self.system_prompt.matches(field.key()).count();
            if count != 1 {
                return invalid(format!(
                    "system prompt must name '{}' exactly once, found {count}",
                    field.key()
                ));
            }
        }
        if !self.system_prompt.contains(FALLBACK_PHRASE) {
            return invalid(format!(
                "system prompt must contain the fallback phrase '{FALLBACK_PHRASE}'"
            ));
        }
        if self.max_tokens == 0 {
            return invalid("max_tokens must be positive".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return invalid(format!("temperature {} outside [0, 2]", self.temperature));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_content: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

/// Pure function of the transcript text and the prompt config.
pub fn build_prompt(transcript: &Transcript, config: &PromptConfig) -> Result<PromptBundle, SummarizerError> {
    if transcript.text.trim().is_empty() {
        return Err(SummarizerError::EmptyTranscript);
    }
    Ok(PromptBundle {
        system_prompt: config.system_prompt.clone(),
        user_content: transcript.text.clone(),
        max_tokens: config.max_tokens,
        temperature: config.temperature,
    })
}
