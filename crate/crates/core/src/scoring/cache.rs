//! Append-only persistent score cache keyed on (scorer id, exact text), which
//! makes rate-limited experiments resumable and warm reruns query-free.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScoreResult, Scorer, ScoringError};

/// One line of the cache file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoreRecord {
    scorer: String,
    text_hash: String,
    text: String,
    result: ScoreResult,
    timestamp: u64,
}

/// Line-delimited JSON cache of scorer responses.
///
/// Keys are the scorer id plus the exact text bytes -- no normalization, so a
/// perturbed variant never collides with its original. Reloading tolerates a
/// corrupt trailing line (an interrupted append).
pub struct ScoreCache {
    path: PathBuf,
    entries: RwLock<HashMap<(String, String), ScoreResult>>,
    writer: Mutex<BufWriter<File>>,
}

impl ScoreCache {
    /// Open or create the cache file at `path` and load every readable record.
    pub fn open(path: &Path) -> Result<Self, ScoringError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let data = std::fs::read_to_string(path)?;
            for line in data.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                // Unparseable lines are dropped; last-write-wins on duplicates.
                if let Ok(record) = serde_json::from_str::<ScoreRecord>(line) {
                    entries.insert((record.scorer, record.text), record.result);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ScoreCache {
            path: path.to_path_buf(),
            entries: RwLock::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, scorer: &str, text: &str) -> Option<ScoreResult> {
        self.entries
            .read()
            .unwrap()
            .get(&(scorer.to_string(), text.to_string()))
            .cloned()
    }

    /// Record a response, appending it to the cache file immediately.
    pub fn put(&self, scorer: &str, text: &str, result: &ScoreResult) -> Result<(), ScoringError> {
        let record = ScoreRecord {
            scorer: scorer.to_string(),
            text_hash: hex_sha256(text),
            text: text.to_string(),
            result: result.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs(),
        };
        {
            let mut writer = self.writer.lock().unwrap();
            serde_json::to_writer(&mut *writer, &record)
                .map_err(|e| ScoringError::Cache(std::io::Error::other(e)))?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        self.entries
            .write()
            .unwrap()
            .insert((record.scorer, record.text), record.result);
        Ok(())
    }
}

fn hex_sha256(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// A scorer fronted by a [`ScoreCache`].
///
/// Hits return the recorded result without touching the inner scorer.
/// Definitive scores are recorded on miss; `Unscored` results are not, so a
/// transient transport failure never poisons a resumed run.
pub struct CachedScorer<S> {
    inner: S,
    cache: std::sync::Arc<ScoreCache>,
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S, cache: std::sync::Arc<ScoreCache>) -> Self {
        CachedScorer { inner, cache }
    }
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn score(&self, text: &str) -> Result<ScoreResult, ScoringError> {
        if let Some(hit) = self.cache.get(self.inner.id(), text) {
            return Ok(hit);
        }
        let result = self.inner.score(text)?;
        if !result.is_unscored() {
            self.cache.put(self.inner.id(), text, &result)?;
        }
        Ok(result)
    }
}
