//! Append-only batch log. A batch is durable before any of it is applied.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    pub seq: u64,
    pub records: Vec<Record>,
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("journal write rejected: {0}")]
    Injected(String),
}

pub trait Journal: Send {
    /// Every batch written so far, in order.
    fn load(&mut self) -> Result<Vec<Batch>, JournalError>;

    /// Durably appends one batch. On error nothing may be considered written.
    fn append(&mut self, batch: &Batch) -> Result<(), JournalError>;
}

/// Parses journal bytes into batches plus the length of the readable prefix.
/// A final line without its newline is a torn write and is dropped; any other
/// unreadable line is corruption.
pub fn parse_journal(bytes: &[u8]) -> Result<(Vec<Batch>, usize), JournalError> {
    let mut batches = Vec::new();
    let mut good_len = 0;
    let mut offset = 0;
    for (i, line) in bytes.split_inclusive(|b| *b == b'\n').enumerate() {
        offset += line.len();
        let Some(body) = line.strip_suffix(b"\n") else { break };
        if body.iter().all(u8::is_ascii_whitespace) {
            good_len = offset;
            continue;
        }
        let b: Batch =
            serde_json::from_slice(body).map_err(|e| JournalError::Corrupt { line: i + 1, reason: e.to_string() })?;
        let expected = batches.last().map_or(1, |p: &Batch| p.seq + 1);
        if b.seq != expected {
            return Err(JournalError::Corrupt {
                line: i + 1,
                reason: format!("sequence {} where {expected} was due", b.seq),
            });
        }
        batches.push(b);
        good_len = offset;
    }
    Ok((batches, good_len))
}

#[derive(Debug)]
pub struct FileJournal {
    path: PathBuf,
    file: File,
}

impl FileJournal {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JournalError> {
        let path = path.as_ref().to_owned();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Journal for FileJournal {
    fn load(&mut self) -> Result<Vec<Batch>, JournalError> {
        let bytes = std::fs::read(&self.path)?;
        let (batches, good_len) = parse_journal(&bytes)?;
        if good_len < bytes.len() {
            tracing::warn!(path = %self.path.display(), dropped = bytes.len() - good_len, "dropping torn journal tail");
            self.file.set_len(good_len as u64)?;
            self.file.sync_all()?;
        }
        Ok(batches)
    }

    fn append(&mut self, batch: &Batch) -> Result<(), JournalError> {
        let mut line = serde_json::to_vec(batch).map_err(|e| JournalError::Injected(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// In-memory journal whose contents survive being reopened, with optional
/// write-failure injection.
#[derive(Debug, Clone, Default)]
pub struct MemoryJournal {
    batches: Arc<Mutex<Vec<Batch>>>,
    fail_after: Arc<AtomicUsize>,
}

impl MemoryJournal {
    pub fn new() -> Self {
        Self { batches: Arc::default(), fail_after: Arc::new(AtomicUsize::new(usize::MAX)) }
    }

    /// Makes every append fail once `n` more appends have succeeded.
    pub fn fail_after(&self, n: usize) {
        self.fail_after.store(n, Ordering::SeqCst);
    }

    pub fn heal(&self) {
        self.fail_after.store(usize::MAX, Ordering::SeqCst);
    }

    pub fn batches(&self) -> Vec<Batch> {
        self.batches.lock().unwrap().clone()
    }
}

impl Journal for MemoryJournal {
    fn load(&mut self) -> Result<Vec<Batch>, JournalError> {
        Ok(self.batches())
    }

    fn append(&mut self, batch: &Batch) -> Result<(), JournalError> {
        let left = self.fail_after.load(Ordering::SeqCst);
        if left == 0 {
            return Err(JournalError::Injected("injected write failure".into()));
        }
        if left != usize::MAX {
            self.fail_after.store(left - 1, Ordering::SeqCst);
        }
        self.batches.lock().unwrap().push(batch.clone());
        Ok(())
    }
}
