//! Session lifecycle: create, attach audio, run the pipeline, and keep a
//! durable record of every step.

mod config;
mod cost;
mod pipeline;
mod session;
mod store;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::Utc;
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::audio::{decode_wav, ingest, AudioClip, AudioError, IngestError, QualityPolicy, RawAudioFile};

pub use config::{ConfigError, Profile, ServiceConfig, DEFAULT_CONCURRENCY_LIMIT};
pub use cost::{estimate_cost, CostEstimate, NationalProjection, PriceConfig};
pub use pipeline::Pipeline;
pub use session::{
    Failure, IllegalTransition, SessionId, SessionRecord, SessionState, Stage, StageTimings,
    TIMING_OVERHEAD_TOLERANCE_S,
};
pub use store::{
    write_artifacts, SessionStore, StorageFailure, AUDIO_DIGEST_FILE, AUDIO_FILE, FILL_PLAN_FILE, SESSIONS_DIR,
    SESSION_LOG, SUMMARY_FILE, TIMINGS_FILE, TRANSCRIPT_FILE,
};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("session {0} not found")]
    NotFound(SessionId),
    #[error("session is {actual}, expected {expected}")]
    WrongState {
        actual: SessionState,
        expected: &'static str,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("audio rejected by quality policy: {}", .0.join(", "))]
    QualityRejected(Vec<String>),
    #[error(transparent)]
    Storage(#[from] StorageFailure),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl OrchestratorError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "not_found",
            Self::WrongState { .. } => "wrong_state",
            Self::Audio(e) => e.code(),
            Self::QualityRejected(_) => "quality_rejected",
            Self::Storage(_) => "storage_failure",
            Self::Config(_) => "config",
        }
    }
}

impl From<IngestError> for OrchestratorError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Audio(a) => Self::Audio(a),
            IngestError::QualityRejected(r) => Self::QualityRejected(r),
        }
    }
}

#[derive(Debug)]
pub struct Orchestrator {
    pipeline: Pipeline,
    store: SessionStore,
    quality_policy: QualityPolicy,
    retain_audio: bool,
    session_locks: Mutex<HashMap<SessionId, Arc<tokio::sync::Mutex<()>>>>,
    run_slots: Semaphore,
}

impl Orchestrator {
    pub fn new(
        pipeline: Pipeline,
        store: SessionStore,
        quality_policy: QualityPolicy,
        retain_audio: bool,
        concurrency_limit: usize,
    ) -> Self {
        Self {
            pipeline,
            store,
            quality_policy,
            retain_audio,
            session_locks: Mutex::new(HashMap::new()),
            run_slots: Semaphore::new(concurrency_limit.max(1)),
        }
    }

    /// Builds backends, loads mapping and prompt, and opens the store.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, OrchestratorError> {
        let pipeline = Pipeline::from_config(config)?;
        let store = SessionStore::open(&config.data_dir)?;
        Ok(Self::new(
            pipeline,
            store,
            config.quality_policy,
            config.retain_audio(),
            config.concurrency_limit,
        ))
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    fn lock_for(&self, id: SessionId) -> Arc<tokio::sync::Mutex<()>> {
        self.session_locks
            .lock()
            .expect("session lock table poisoned")
            .entry(id)
            .or_default()
            .clone()
    }

    pub async fn create_session(&self) -> Result<SessionRecord, OrchestratorError> {
        let record = SessionRecord::new(Utc::now());
        self.store.persist(&record)?;
        Ok(record)
    }

    /// Decodes and quality-gates the upload, then caches the 16 kHz clip in
    /// the session directory. Errors leave the session untouched.
    pub async fn attach_audio(&self, id: SessionId, file: RawAudioFile) -> Result<SessionRecord, OrchestratorError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut record = self.get_session(id)?;
        if record.state != SessionState::Created {
            return Err(OrchestratorError::WrongState {
                actual: record.state,
                expected: "created",
            });
        }

        let policy = self.quality_policy;
        let (clip, _report) = tokio::task::spawn_blocking(move || ingest(&file, &policy))
            .await
            .expect("audio ingest task panicked")?;

        let dir = self.store.session_dir(id);
        std::fs::create_dir_all(&dir).map_err(|source| StorageFailure {
            path: dir.clone(),
            source,
        })?;
        let audio_path = dir.join(AUDIO_FILE);
        let wav = clip.to_wav();
        std::fs::write(&audio_path, &wav).map_err(|source| StorageFailure {
            path: audio_path,
            source,
        })?;

        record.audio_digest = Some(crate::digest::ContentDigest::of_bytes(&wav));
        record.audio_duration_s = Some(clip.duration_s());
        record
            .transition(SessionState::AudioReceived, Utc::now())
            .expect("created -> audio_received");
        self.store.persist(&record)?;
        Ok(record)
    }

    fn load_cached_clip(&self, id: SessionId) -> Option<AudioClip> {
        let bytes = std::fs::read(self.store.session_dir(id).join(AUDIO_FILE)).ok()?;
        let file = RawAudioFile::from_named_bytes(bytes, AUDIO_FILE).ok()?;
        decode_wav(&file).ok()
    }

    /// Runs the remaining stages, persisting after each transition. A
    /// session interrupted mid-run (state transcribed or summarized) resumes
    /// where it stopped.
    pub async fn run_pipeline(&self, id: SessionId) -> Result<SessionRecord, OrchestratorError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut record = self.get_session(id)?;
        if Pipeline::next_stage(record.state).is_none() {
            return Err(OrchestratorError::WrongState {
                actual: record.state,
                expected: "audio_received",
            });
        }
        let _slot = self.run_slots.acquire().await.expect("run semaphore closed");

        let clip = if record.state == SessionState::AudioReceived {
            self.load_cached_clip(id)
        } else {
            None
        };
        while let Some(stage) = self.pipeline.run_stage(&mut record, clip.as_ref()).await {
            self.store.persist(&record)?;
            if stage == Stage::Transcribe && record.state == SessionState::Transcribed && !self.retain_audio {
                let path = self.store.session_dir(id).join(AUDIO_FILE);
                if let Err(source) = std::fs::remove_file(&path) {
                    if source.kind() != std::io::ErrorKind::NotFound {
                        return Err(StorageFailure { path, source }.into());
                    }
                }
            }
        }
        Ok(record)
    }

    pub fn get_session(&self, id: SessionId) -> Result<SessionRecord, OrchestratorError> {
        self.store.get(id).ok_or(OrchestratorError::NotFound(id))
    }

    pub fn list_sessions(&self, state: Option<SessionState>) -> Vec<SessionRecord> {
        self.store.list(state)
    }
}
