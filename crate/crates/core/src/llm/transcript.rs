//! Line-delimited JSON transcripts for deterministic record/replay.
//!
//! One [`TranscriptEntry`] per line. An entry whose `request_digest` is
//! absent matches any request, which lets hand-written fixtures skip the
//! digest. Entries carrying `error` replay a transport failure.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cost::TokenUsage;
use super::message::ChatMessage;
use super::transport::{ChatTransport, Completion, TransportError};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub sequence_no: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

impl TranscriptEntry {
    pub fn response(sequence_no: u64, response: impl Into<String>) -> Self {
        Self {
            sequence_no,
            request_digest: None,
            response: Some(response.into()),
            error: None,
            usage: None,
        }
    }

    pub fn failure(sequence_no: u64, error: impl Into<String>) -> Self {
        Self {
            sequence_no,
            request_digest: None,
            response: None,
            error: Some(error.into()),
            usage: None,
        }
    }
}

/// SHA-256 over the role/content pairs of the outbound messages.
pub fn request_digest(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for m in messages {
        hasher.update(m.role.as_str().as_bytes());
        hasher.update([0u8]);
        hasher.update(m.content.as_bytes());
        hasher.update([0xffu8]);
    }
    hex::encode(hasher.finalize())
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>> {
    let file =
        File::open(path).map_err(|e| Error::Transcript(format!("{}: {e}", path.display())))?;
    parse_transcript(BufReader::new(file))
}

pub fn parse_transcript(reader: impl BufRead) -> Result<Vec<TranscriptEntry>> {
    let mut entries: Vec<TranscriptEntry> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Transcript(format!("line {}: {e}", lineno + 1)))?;
        if let Some(prev) = entries.last() {
            if entry.sequence_no <= prev.sequence_no {
                return Err(Error::Transcript(format!(
                    "line {}: sequence number {} does not increase",
                    lineno + 1,
                    entry.sequence_no
                )));
            }
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Serves a transcript back in order, checking digests where present.
pub struct ReplayTransport {
    entries: Vec<TranscriptEntry>,
    cursor: Mutex<usize>,
}

impl ReplayTransport {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self {
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        Ok(Self::new(read_transcript(path)?))
    }

    /// Entries not yet consumed.
    pub fn remaining(&self) -> usize {
        self.entries.len() - *self.cursor.lock().unwrap()
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(
        &self,
        _model: &str,
        messages: &[ChatMessage],
    ) -> Result<Completion, TransportError> {
        let mut cursor = self.cursor.lock().unwrap();
        let Some(entry) = self.entries.get(*cursor) else {
            return Err(TransportError::Fatal(Error::ReplayExhausted(
                *cursor as u64,
            )));
        };
        if let Some(expected) = &entry.request_digest {
            let actual = request_digest(messages);
            if &actual != expected {
                return Err(TransportError::Fatal(Error::ReplayMismatch {
                    seq: entry.sequence_no,
                    expected: expected.clone(),
                    actual,
                }));
            }
        }
        *cursor += 1;
        match (&entry.response, &entry.error) {
            (_, Some(err)) => Err(TransportError::Retryable(err.clone())),
            (Some(text), None) => Ok(Completion {
                text: text.clone(),
                usage: entry.usage,
            }),
            (None, None) => Ok(Completion {
                text: String::new(),
                usage: entry.usage,
            }),
        }
    }
}

/// Forwards to an inner transport and appends every exchange, failures
/// included, to a transcript file.
pub struct RecordingTransport {
    inner: Arc<dyn ChatTransport>,
    path: PathBuf,
    state: Mutex<RecorderState>,
}

struct RecorderState {
    next_seq: u64,
    file: File,
}

impl RecordingTransport {
    pub fn create(inner: Arc<dyn ChatTransport>, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::Transcript(format!("{}: {e}", path.display())))?;
        Ok(Self {
            inner,
            path,
            state: Mutex::new(RecorderState { next_seq: 0, file }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl ChatTransport for RecordingTransport {
    fn complete(
        &self,
        model: &str,
        messages: &[ChatMessage],
    ) -> Result<Completion, TransportError> {
        let result = self.inner.complete(model, messages);
        let mut state = self.state.lock().unwrap();
        let mut entry = TranscriptEntry {
            sequence_no: state.next_seq,
            request_digest: Some(request_digest(messages)),
            response: None,
            error: None,
            usage: None,
        };
        match &result {
            Ok(c) => {
                entry.response = Some(c.text.clone());
                entry.usage = c.usage;
            }
            Err(TransportError::Retryable(e)) => entry.error = Some(e.clone()),
            // Fatal errors end the run; nothing worth replaying.
            Err(TransportError::Fatal(_)) => return result,
        }
        state.next_seq += 1;
        let line = serde_json::to_string(&entry).expect("transcript entry serializes");
        if let Err(e) = writeln!(state.file, "{line}").and_then(|_| state.file.flush()) {
            return Err(TransportError::Fatal(Error::Transcript(e.to_string())));
        }
        result
    }
}
