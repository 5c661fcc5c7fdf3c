//! Append-only session log plus a per-session artifact directory.
//!
//! Every state change appends a full record snapshot to `sessions.jsonl`;
//! the last snapshot for an id wins on reload. Artifacts are written before
//! the log line, so a logged state always has its files on disk.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use super::session::{SessionId, SessionRecord, SessionState};

pub const SESSION_LOG: &str = "sessions.jsonl";
pub const SESSIONS_DIR: &str = "sessions";

pub const AUDIO_FILE: &str = "audio.wav";
pub const AUDIO_DIGEST_FILE: &str = "audio_digest.txt";
pub const TRANSCRIPT_FILE: &str = "transcript.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FILL_PLAN_FILE: &str = "fill_plan.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Error)]
#[error("session storage failure at {path}: {source}")]
pub struct StorageFailure {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> StorageFailure + '_ {
    move |source| StorageFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), StorageFailure> {
    fs::write(path, contents).map_err(io_at(path))
}

/// Writes whichever of the record's artifacts exist into `dir`. The CLI
/// uses the same function, so both produce byte-identical files.
pub fn write_artifacts(dir: &Path, record: &SessionRecord) -> Result<(), StorageFailure> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    if let Some(digest) = &record.audio_digest {
        write_file(&dir.join(AUDIO_DIGEST_FILE), format!("{digest}\n").as_bytes())?;
    }
    if let Some(transcript) = &record.transcript {
        write_file(&dir.join(TRANSCRIPT_FILE), transcript.text.as_bytes())?;
    }
    if let Some(summary) = &record.summary {
        write_file(&dir.join(SUMMARY_FILE), summary.to_json_pretty().as_bytes())?;
    }
    if let Some(plan) = &record.fill_plan {
        write_file(&dir.join(FILL_PLAN_FILE), plan.to_json_pretty().as_bytes())?;
    }
    if record.transcript.is_some() {
        write_file(&dir.join(TIMINGS_FILE), record.timings.to_json_pretty().as_bytes())?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    records: RwLock<HashMap<SessionId, SessionRecord>>,
    /// Creation order, for stable listings.
    order: RwLock<Vec<SessionId>>,
    log: Mutex<File>,
}

impl SessionStore {
    /// Opens (or creates) a store and replays its log. Lines that do not
    /// parse, such as a write torn by a crash, are skipped.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageFailure> {
        let root = root.into();
        let sessions = root.join(SESSIONS_DIR);
        fs::create_dir_all(&sessions).map_err(io_at(&sessions))?;
        let log_path = root.join(SESSION_LOG);

        let mut records = HashMap::new();
        let mut order = Vec::new();
        if log_path.exists() {
            let file = File::open(&log_path).map_err(io_at(&log_path))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_at(&log_path))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<SessionRecord>(&line) {
                    Ok(record) => {
                        if !records.contains_key(&record.session_id) {
                            order.push(record.session_id);
                        }
                        records.insert(record.session_id, record);
                    }
                    Err(e) => tracing::warn!(line = n + 1, error = %e, "skipping unreadable session log line"),
                }
            }
        }

        let mut log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io_at(&log_path))?;
        // A torn final line has no newline; start the next record on a fresh one.
        if fs::read(&log_path)
            .map_err(io_at(&log_path))?
            .last()
            .is_some_and(|&b| b != b'\n')
        {
            log.write_all(b"\n").map_err(io_at(&log_path))?;
        }

        Ok(Self {
            root,
            records: RwLock::new(records),
            order: RwLock::new(order),
            log: Mutex::new(log),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join(SESSION_LOG)
    }

    pub fn session_dir(&self, id: SessionId) -> PathBuf {
        self.root.join(SESSIONS_DIR).join(id.to_string())
    }

    /// Writes artifacts, then appends the snapshot and syncs the log.
    pub fn persist(&self, record: &SessionRecord) -> Result<(), StorageFailure> {
        write_artifacts(&self.session_dir(record.session_id), record)?;
        let mut line = serde_json::to_string(record).expect("session record serializes");
        line.push('\n');
        {
            let log_path = self.log_path();
            let mut log = self.log.lock().expect("session log lock poisoned");
            log.write_all(line.as_bytes()).map_err(io_at(&log_path))?;
            log.sync_data().map_err(io_at(&log_path))?;
        }
        let mut records = self.records.write().expect("session store lock poisoned");
        if records.insert(record.session_id, record.clone()).is_none() {
            self.order
                .write()
                .expect("session store lock poisoned")
                .push(record.session_id);
        }
        Ok(())
    }

    pub fn get(&self, id: SessionId) -> Option<SessionRecord> {
        self.records
            .read()
            .expect("session store lock poisoned")
            .get(&id)
            .cloned()
    }

    /// Records in creation order, optionally restricted to one state.
    pub fn list(&self, state: Option<SessionState>) -> Vec<SessionRecord> {
        let records = self.records.read().expect("session store lock poisoned");
        let order = self.order.read().expect("session store lock poisoned");
        order
            .iter()
            .filter_map(|id| records.get(id))
            .filter(|r| state.is_none_or(|s| r.state == s))
            .cloned()
            .collect()
    }

    /// Every snapshot logged for one session, oldest first.
    pub fn history(&self, id: SessionId) -> Result<Vec<SessionRecord>, StorageFailure> {
        let log_path = self.log_path();
        let text = fs::read_to_string(&log_path).map_err(io_at(&log_path))?;
        Ok(text
            .lines()
            .filter_map(|line| serde_json::from_str::<SessionRecord>(line).ok())
            .filter(|r| r.session_id == id)
            .collect())
    }
}
