//! Append-only transcript stores for record/replay runs.
//!
//! A store is line-delimited JSON: one header record naming the model
//! fingerprint, then one record per turn embedding the full message history
//! for auditability. Lookup keys hash the fingerprint plus the entire
//! history (not just the last prompt — follow-up answers depend on dialogue
//! context), so a store written on one machine replays identically on any
//! other. Keys are recomputed from the embedded history at load time; a
//! stored key that disagrees is rejected as corruption.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatError, ChatMessage, Role};

pub const TRANSCRIPT_VERSION: u32 = 1;

/// Stable content hash of a backend fingerprint plus a full message history.
pub fn transcript_key(fingerprint: &str, messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"iextract-transcript-v1\x00");
    hasher.update(fingerprint.as_bytes());
    hasher.update([0x00]);
    for message in messages {
        let role = match message.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        hasher.update(role.as_bytes());
        hasher.update([0x1f]);
        hasher.update(message.content.as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    transcript_version: u32,
    model: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<String>,
    messages: Vec<ChatMessage>,
    reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<String>,
}

/// Immutable reply store for replay runs; shared read-only across workers.
#[derive(Debug)]
pub struct TranscriptStore {
    model: String,
    replies: HashMap<String, String>,
    warnings: Vec<String>,
}

impl TranscriptStore {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ChatError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| {
            ChatError::Transcript(format!("cannot open transcript store {}: {e}", path.display()))
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let header: Header = match lines.next() {
            Some((_, Ok(line))) => serde_json::from_str(&line)
                .map_err(|e| ChatError::Transcript(format!("bad transcript header: {e}")))?,
            Some((_, Err(e))) => return Err(ChatError::Transcript(e.to_string())),
            None => return Err(ChatError::Transcript("empty transcript store".into())),
        };
        if header.transcript_version != TRANSCRIPT_VERSION {
            return Err(ChatError::Transcript(format!(
                "unsupported transcript version {} (expected {TRANSCRIPT_VERSION})",
                header.transcript_version
            )));
        }

        let mut replies = HashMap::new();
        let mut warnings = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| ChatError::Transcript(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry = serde_json::from_str(&line).map_err(|e| {
                ChatError::Transcript(format!("bad transcript entry on line {}: {e}", lineno + 1))
            })?;
            let key = transcript_key(&header.model, &entry.messages);
            if let Some(stored) = &entry.key {
                if stored != &key {
                    return Err(ChatError::Transcript(format!(
                        "stored key mismatch on line {} (corrupt or foreign store)",
                        lineno + 1
                    )));
                }
            }
            match replies.get(&key) {
                Some(existing) if existing != &entry.reply => warnings.push(format!(
                    "duplicate key {} with differing reply on line {}; keeping first",
                    &key[..12.min(key.len())],
                    lineno + 1
                )),
                Some(_) => {}
                None => {
                    replies.insert(key, entry.reply);
                }
            }
        }
        Ok(TranscriptStore {
            model: header.model,
            replies,
            warnings,
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn lookup(&self, key: &str) -> Option<&str> {
        self.replies.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Serialized appender for record runs. One writer per run; concurrent
/// sessions funnel through the mutex.
pub struct TranscriptWriter {
    model: String,
    file: Mutex<BufWriter<File>>,
    path: PathBuf,
}

impl TranscriptWriter {
    /// Create a fresh store at `path` (parent directories included) and
    /// write its header.
    pub fn create(path: impl AsRef<Path>, model: &str) -> Result<Self, ChatError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| ChatError::Transcript(format!("cannot create {}: {e}", parent.display())))?;
            }
        }
        let file = File::create(path).map_err(|e| {
            ChatError::Transcript(format!("cannot create transcript store {}: {e}", path.display()))
        })?;
        let mut writer = BufWriter::new(file);
        let header = Header {
            transcript_version: TRANSCRIPT_VERSION,
            model: model.to_string(),
        };
        serde_json::to_writer(&mut writer, &header)
            .map_err(|e| ChatError::Transcript(e.to_string()))?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| ChatError::Transcript(e.to_string()))?;
        Ok(TranscriptWriter {
            model: model.to_string(),
            file: Mutex::new(writer),
            path: path.to_path_buf(),
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(
        &self,
        key: &str,
        messages: &[ChatMessage],
        reply: &str,
    ) -> Result<(), ChatError> {
        let entry = Entry {
            key: Some(key.to_string()),
            messages: messages.to_vec(),
            reply: reply.to_string(),
            timestamp: Some(chrono::Utc::now().to_rfc3339()),
        };
        let mut writer = self.file.lock().expect("writer lock");
        serde_json::to_writer(&mut *writer, &entry)
            .map_err(|e| ChatError::Transcript(e.to_string()))?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| ChatError::Transcript(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs(pairs: &[(&str, &str)]) -> Vec<ChatMessage> {
        pairs
            .iter()
            .map(|(role, content)| ChatMessage {
                role: match *role {
                    "system" => Role::System,
                    "user" => Role::User,
                    _ => Role::Assistant,
                },
                content: content.to_string(),
            })
            .collect()
    }

    #[test]
    fn key_depends_on_full_history_and_fingerprint() {
        let a = transcript_key("m", &msgs(&[("user", "q1")]));
        let b = transcript_key("m", &msgs(&[("user", "q1"), ("assistant", "r"), ("user", "q2")]));
        let c = transcript_key("other-model", &msgs(&[("user", "q1")]));
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, transcript_key("m", &msgs(&[("user", "q1")])));
    }

    #[test]
    fn record_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let writer = TranscriptWriter::create(&path, "test-model").unwrap();
        let history = msgs(&[("user", "hello")]);
        let key = transcript_key("test-model", &history);
        writer.append(&key, &history, "hi there").unwrap();

        let store = TranscriptStore::load(&path).unwrap();
        assert_eq!(store.model(), "test-model");
        assert_eq!(store.lookup(&key), Some("hi there"));
        assert_eq!(store.lookup("missing"), None);
        assert!(store.warnings().is_empty());
    }

    #[test]
    fn hand_written_entries_need_no_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"transcript_version\":1,\"model\":\"m\"}\n",
                "{\"messages\":[{\"role\":\"user\",\"content\":\"q\"}],\"reply\":\"r\"}\n",
            ),
        )
        .unwrap();
        let store = TranscriptStore::load(&path).unwrap();
        let key = transcript_key("m", &msgs(&[("user", "q")]));
        assert_eq!(store.lookup(&key), Some("r"));
    }

    #[test]
    fn corrupt_stored_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"transcript_version\":1,\"model\":\"m\"}\n",
                "{\"key\":\"deadbeef\",\"messages\":[{\"role\":\"user\",\"content\":\"q\"}],\"reply\":\"r\"}\n",
            ),
        )
        .unwrap();
        assert!(TranscriptStore::load(&path).is_err());
    }
}
