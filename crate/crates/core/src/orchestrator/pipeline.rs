//! The three processing stages, shared by the service and the CLI.

use std::time::Instant;

use chrono::Utc;

use super::config::{ConfigError, ServiceConfig};
use super::cost::{estimate_cost, PriceConfig};
use super::session::{Failure, SessionRecord, SessionState, Stage};
use crate::audio::{resample, AudioClip, TRANSCRIPTION_RATE_HZ};
use crate::form_mapper::{build_fill_plan, FieldMapping};
use crate::summarizer::Summarizer;
use crate::transcription::Transcriber;

#[derive(Debug)]
pub struct Pipeline {
    transcriber: Transcriber,
    summarizer: Summarizer,
    mapping: FieldMapping,
    prices: PriceConfig,
}

impl Pipeline {
    pub fn new(transcriber: Transcriber, summarizer: Summarizer, mapping: FieldMapping, prices: PriceConfig) -> Self {
        Self {
            transcriber,
            summarizer,
            mapping,
            prices,
        }
    }

    /// Builds both backends and loads the prompt and mapping named by `config`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ConfigError> {
        let transcriber = Transcriber::from_descriptor(config.transcription.clone(), &config.network)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let summarizer = Summarizer::from_descriptor(config.summarizer.clone(), config.load_prompt()?, &config.network)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self::new(
            transcriber,
            summarizer,
            config.load_mapping()?,
            config.prices.clone(),
        ))
    }

    pub fn mapping(&self) -> &FieldMapping {
        &self.mapping
    }

    /// The stage that moves a record out of `state`, if any.
    pub fn next_stage(state: SessionState) -> Option<Stage> {
        match state {
            SessionState::AudioReceived => Some(Stage::Transcribe),
            SessionState::Transcribed => Some(Stage::Summarize),
            SessionState::Summarized => Some(Stage::Fill),
            _ => None,
        }
    }

    /// Runs the next stage for `record` and moves it to the following state,
    /// or to `failed` with the stage's error. Artifacts from earlier stages
    /// are left in place. The stage's wall time is added both to its own
    /// timing and to `total_s`, so callers may persist between stages
    /// without that I/O counting towards the total.
    ///
    /// Returns the stage that ran, or `None` if the record had nothing left
    /// to run.
    pub async fn run_stage(&self, record: &mut SessionRecord, clip: Option<&AudioClip>) -> Option<Stage> {
        let stage = Self::next_stage(record.state)?;
        let started = Instant::now();
        let outcome = match stage {
            Stage::Transcribe => self.transcribe(record, clip).await,
            Stage::Summarize => self.summarize(record).await,
            Stage::Fill => {
                let t = Instant::now();
                let summary = record.summary.as_ref().expect("summarized record has a summary");
                record.fill_plan = Some(build_fill_plan(summary, &self.mapping));
                record.timings.fill_s += t.elapsed().as_secs_f64();
                Ok(SessionState::PlanReady)
            }
        };
        let now = Utc::now();
        match outcome {
            Ok(next) => record.transition(next, now).expect("pipeline follows the state order"),
            Err((error_code, message)) => record
                .fail(
                    Failure {
                        stage,
                        error_code: error_code.to_string(),
                        message,
                    },
                    now,
                )
                .expect("running stages may always fail"),
        }
        record.timings.total_s += started.elapsed().as_secs_f64();
        Some(stage)
    }

    /// Runs stages until the record is `plan_ready` or `failed`.
    pub async fn run_to_end(&self, record: &mut SessionRecord, clip: Option<&AudioClip>) {
        while self.run_stage(record, clip).await.is_some() {}
    }

    async fn transcribe(
        &self,
        record: &mut SessionRecord,
        clip: Option<&AudioClip>,
    ) -> Result<SessionState, (&'static str, String)> {
        let clip = clip.ok_or(("audio_missing", "no cached audio for this session".to_string()))?;
        let started = Instant::now();
        let clip = resample(clip, TRANSCRIPTION_RATE_HZ);
        let result = self.transcriber.transcribe(&clip).await;
        record.timings.transcribe_s += started.elapsed().as_secs_f64();
        let transcript = result.map_err(|e| (e.code(), e.to_string()))?;
        record.transcript = Some(transcript);
        Ok(SessionState::Transcribed)
    }

    async fn summarize(&self, record: &mut SessionRecord) -> Result<SessionState, (&'static str, String)> {
        let transcript = record.transcript.as_ref().expect("transcribed record has a transcript");
        let started = Instant::now();
        let result = self.summarizer.summarize(transcript).await;
        record.timings.summarize_s += started.elapsed().as_secs_f64();
        let outcome = result.map_err(|e| (e.code(), e.to_string()))?;

        let mut cost = estimate_cost(
            transcript.audio_duration_s,
            outcome.usage.input_tokens,
            outcome.usage.output_tokens,
            &self.prices,
        );
        cost.tokens_estimated = outcome.usage.estimated;
        record.cost = Some(cost);
        record.summary = Some(outcome.summary);
        Ok(SessionState::Summarized)
    }
}
