use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use super::cost::CostEstimate;
use crate::audio::AudioClip;
use crate::digest::ContentDigest;
use crate::form_mapper::FillPlan;
use crate::summarizer::MedicalSummary;
use crate::transcription::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(Uuid);

impl SessionId {
    pub fn new() -> Self {
        Self(Uuid::new_v4())
    }
}

impl Default for SessionId {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SessionId {
    type Err = uuid::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Uuid::parse_str(s).map(Self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    AudioReceived,
    Transcribed,
    Summarized,
    PlanReady,
    Failed,
}

impl SessionState {
    pub const ALL: [SessionState; 6] = [
        SessionState::Created,
        SessionState::AudioReceived,
        SessionState::Transcribed,
        SessionState::Summarized,
        SessionState::PlanReady,
        SessionState::Failed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::AudioReceived => "audio_received",
            SessionState::Transcribed => "transcribed",
            SessionState::Summarized => "summarized",
            SessionState::PlanReady => "plan_ready",
            SessionState::Failed => "failed",
        }
    }

    /// Forward along the stage order one step at a time, or to `failed` from
    /// any state but `failed` itself.
    pub fn can_transition_to(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (Created, AudioReceived)
                | (AudioReceived, Transcribed)
                | (Transcribed, Summarized)
                | (Summarized, PlanReady)
                | (Created | AudioReceived | Transcribed | Summarized | PlanReady, Failed)
        )
    }

    /// No further pipeline stage applies.
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::PlanReady | SessionState::Failed)
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SessionState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown session state '{s}'"))
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Transcribe,
    Summarize,
    Fill,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Transcribe => "transcribe",
            Stage::Summarize => "summarize",
            Stage::Fill => "fill",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub transcribe_s: f64,
    pub summarize_s: f64,
    pub fill_s: f64,
    pub total_s: f64,
}

/// Allowed gap between the total and the stage sum.
pub const TIMING_OVERHEAD_TOLERANCE_S: f64 = 0.5;

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.transcribe_s + self.summarize_s + self.fill_s
    }

    pub fn is_additive(&self) -> bool {
        (self.total_s - self.stage_sum()).abs() <= TIMING_OVERHEAD_TOLERANCE_S
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("timings serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub error_code: String,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("illegal session transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: SessionState,
    pub to: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: SessionId,
    pub state: SessionState,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub audio_digest: Option<ContentDigest>,
    pub audio_duration_s: Option<f64>,
    pub transcript: Option<Transcript>,
    pub summary: Option<MedicalSummary>,
    pub fill_plan: Option<FillPlan>,
    pub timings: StageTimings,
    pub cost: Option<CostEstimate>,
    pub failure: Option<Failure>,
}

impl SessionRecord {
    pub fn new(now: DateTime<Utc>) -> Self {
        Self {
            session_id: SessionId::new(),
            state: SessionState::Created,
            created_at: now,
            updated_at: now,
            audio_digest: None,
            audio_duration_s: None,
            transcript: None,
            summary: None,
            fill_plan: None,
            timings: StageTimings::default(),
            cost: None,
            failure: None,
        }
    }

    /// A fresh record already holding `clip`, as after an upload.
    pub fn with_audio(clip: &AudioClip) -> Self {
        let now = Utc::now();
        let mut record = Self::new(now);
        record.audio_digest = Some(clip.digest());
        record.audio_duration_s = Some(clip.duration_s());
        record.state = SessionState::AudioReceived;
        record
    }

    pub fn transition(&mut self, to: SessionState, now: DateTime<Utc>) -> Result<(), IllegalTransition> {
        if !self.state.can_transition_to(to) {
            return Err(IllegalTransition { from: self.state, to });
        }
        self.state = to;
        self.updated_at = now;
        Ok(())
    }

    pub fn fail(&mut self, failure: Failure, now: DateTime<Utc>) -> Result<(), IllegalTransition> {
        self.transition(SessionState::Failed, now)?;
        self.failure = Some(failure);
        Ok(())
    }

    /// Number of artifact-producing steps completed: audio, transcript,
    /// summary, plan.
    fn completed_steps(&self) -> usize {
        match self.state {
            SessionState::Created => 0,
            SessionState::AudioReceived => 1,
            SessionState::Transcribed => 2,
            SessionState::Summarized => 3,
            SessionState::PlanReady => 4,
            SessionState::Failed => match self.failure.as_ref().map(|f| f.stage) {
                Some(Stage::Transcribe) => 1,
                Some(Stage::Summarize) => 2,
                Some(Stage::Fill) => 3,
                None => 0,
            },
        }
    }

    /// Checks that exactly the artifacts of completed stages are present.
    pub fn check_invariants(&self) -> Result<(), String> {
        let done = self.completed_steps();
        let present = [
            self.audio_digest.is_some(),
            self.transcript.is_some(),
            self.summary.is_some(),
            self.fill_plan.is_some(),
        ];
        for (i, (&has, name)) in present
            .iter()
            .zip(["audio_digest", "transcript", "summary", "fill_plan"])
            .enumerate()
        {
            if has != (i < done) {
                return Err(format!(
                    "state {} with {} stage(s) done but {name} is {}",
                    self.state,
                    done,
                    if has { "present" } else { "missing" }
                ));
            }
        }
        if (self.state == SessionState::Failed) != self.failure.is_some() {
            return Err("failure is set iff the state is failed".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SessionState::*;

    #[test]
    fn transition_table_is_exact() {
        let legal = [
            (Created, AudioReceived),
            (AudioReceived, Transcribed),
            (Transcribed, Summarized),
            (Summarized, PlanReady),
            (Created, Failed),
            (AudioReceived, Failed),
            (Transcribed, Failed),
            (Summarized, Failed),
            (PlanReady, Failed),
        ];
        for from in SessionState::ALL {
            for to in SessionState::ALL {
                assert_eq!(
                    from.can_transition_to(to),
                    legal.contains(&(from, to)),
                    "{from} -> {to}"
                );
            }
        }
    }

    #[test]
    fn record_rejects_illegal_transition() {
        let now = Utc::now();
        let mut r = SessionRecord::new(now);
        assert_eq!(
            r.transition(Transcribed, now),
            Err(IllegalTransition {
                from: Created,
                to: Transcribed
            })
        );
        assert_eq!(r.state, Created);
        r.transition(AudioReceived, now).unwrap();
        r.fail(
            Failure {
                stage: Stage::Transcribe,
                error_code: "backend_rejected".into(),
                message: "x".into(),
            },
            now,
        )
        .unwrap();
        assert!(r.transition(Transcribed, now).is_err());
        assert!(r.transition(Failed, now).is_err());
    }

    #[test]
    fn state_strings_round_trip() {
        for s in SessionState::ALL {
            assert_eq!(s.as_str().parse::<SessionState>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn fresh_record_satisfies_invariants() {
        let r = SessionRecord::new(Utc::now());
        r.check_invariants().unwrap();
        let mut bad = r.clone();
        bad.audio_digest = Some(ContentDigest::of_text("x"));
        assert!(bad.check_invariants().is_err());
    }

    #[test]
    fn timing_additivity() {
        let t = StageTimings {
            transcribe_s: 23.0,
            summarize_s: 4.0,
            fill_s: 1.0,
            total_s: 28.0,
        };
        assert!(t.is_additive());
        let t = StageTimings { total_s: 28.6, ..t };
        assert!(!t.is_additive());
    }
}
