use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{ChatCompletion, ChatReply, ChatRequest, SummarizerError};
use crate::digest::ContentDigest;

/// Canned reply for one transcript. A sequence is replayed call by call and
/// its last element repeats once exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureReply {
    Single(String),
    Sequence(Vec<String>),
}

impl FixtureReply {
    fn nth(&self, call: usize) -> Option<&str> {
        match self {
            FixtureReply::Single(s) => Some(s),
            FixtureReply::Sequence(v) => v.get(call).or(v.last()).map(String::as_str),
        }
    }
}

/// Deterministic chat backend keyed by the SHA-256 of the transcript text.
/// Serialized as `{ "<digest>": "<reply>" | ["<reply>", …], … }`.
#[derive(Debug, Default)]
pub struct FixtureChat {
    replies: RwLock<BTreeMap<ContentDigest, FixtureReply>>,
    served: Mutex<HashMap<ContentDigest, usize>>,
    calls: AtomicUsize,
    last_request: Mutex<Option<ChatRequest>>,
}

impl FixtureChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, SummarizerError> {
        let replies: BTreeMap<ContentDigest, FixtureReply> = serde_json::from_str(text)
            .map_err(|e| SummarizerError::Config(format!("summary fixture registry {origin} is not valid: {e}")))?;
        let chat = Self::new();
        for (digest, reply) in replies {
            chat.register(digest, reply)?;
        }
        Ok(chat)
    }

    pub fn load(path: &Path) -> Result<Self, SummarizerError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SummarizerError::Config(format!("cannot read summary fixture registry {}: {e}", path.display()))
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let replies = self.replies.read().expect("fixture lock poisoned");
        serde_json::to_string_pretty(&*replies).expect("fixture map serializes")
    }

    pub fn register(&self, digest: ContentDigest, reply: FixtureReply) -> Result<(), SummarizerError> {
        if let FixtureReply::Sequence(v) = &reply {
            if v.is_empty() {
                return Err(SummarizerError::Config(format!("empty reply sequence for {digest}")));
            }
        }
        let mut replies = self.replies.write().expect("fixture lock poisoned");
        if replies.contains_key(&digest) {
            return Err(SummarizerError::Config(format!(
                "digest {digest} is already registered"
            )));
        }
        replies.insert(digest, reply);
        Ok(())
    }

    /// Total backend calls served, hits and misses alike.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn last_request(&self) -> Option<ChatRequest> {
        self.last_request.lock().expect("fixture lock poisoned").clone()
    }
}

#[async_trait]
impl ChatCompletion for FixtureChat {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatReply, SummarizerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        *self.last_request.lock().expect("fixture lock poisoned") = Some(request.clone());

        let transcript = request.transcript().unwrap_or_default();
        let digest = ContentDigest::of_text(transcript);
        let replies = self.replies.read().expect("fixture lock poisoned");
        let reply = replies.get(&digest).ok_or_else(|| SummarizerError::BackendRejected {
            status: None,
            message: format!("no fixture for digest {digest}"),
        })?;

        let mut served = self.served.lock().expect("fixture lock poisoned");
        let call = served.entry(digest).or_insert(0);
        let content = reply.nth(*call).unwrap_or_default().to_string();
        *call += 1;
        Ok(ChatReply { content, usage: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_repeats_last() {
        let r = FixtureReply::Sequence(vec!["a".into(), "b".into()]);
        assert_eq!(r.nth(0), Some("a"));
        assert_eq!(r.nth(1), Some("b"));
        assert_eq!(r.nth(5), Some("b"));
    }

    #[test]
    fn json_accepts_both_shapes() {
        let a = ContentDigest::of_text("a");
        let b = ContentDigest::of_text("b");
        let text = format!(r#"{{"{a}": "satu", "{b}": ["x", "y"]}}"#);
        let chat = FixtureChat::from_json(&text, "mem").unwrap();
        let back = FixtureChat::from_json(&chat.to_json(), "mem").unwrap();
        assert_eq!(back.to_json(), chat.to_json());
    }
}
