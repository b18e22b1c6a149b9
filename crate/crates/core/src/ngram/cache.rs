//! Persistent frequency cache: one append-only JSONL file with an
//! in-memory index built at open. Every record is self-contained, so a
//! torn tail write costs one entry, never the file.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

/// Everything that changes the endpoint's answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    /// Lowercased, space-joined token sequence.
    pub gram: String,
    pub corpus: u16,
    pub year_start: u16,
    pub year_end: u16,
    pub smoothing: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub mean_freq: f64,
    pub found: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct DiskRow {
    #[serde(flatten)]
    key: CacheKey,
    #[serde(flatten)]
    record: CacheRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub path: PathBuf,
    pub entries: usize,
    /// Unparseable lines skipped at open; they read as misses and are
    /// dropped from the file on the next purge.
    pub corrupted_lines: usize,
}

/// Concurrent reads against the index; appends serialized through one
/// writer handle.
pub struct DiskCache {
    path: PathBuf,
    index: DashMap<CacheKey, CacheRecord>,
    writer: Mutex<BufWriter<File>>,
    corrupted_lines: usize,
}

impl DiskCache {
    /// Opens or creates the cache file and indexes every intact record.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<DiskCache> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let index = DashMap::new();
        let mut corrupted_lines = 0;
        match File::open(&path) {
            Ok(f) => {
                for line in BufReader::new(f).lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<DiskRow>(&line) {
                        Ok(row) => {
                            index.insert(row.key, row.record);
                        }
                        Err(e) => {
                            corrupted_lines += 1;
                            tracing::warn!(path = %path.display(), error = %e, "skipping corrupted cache line");
                        }
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(DiskCache {
            path,
            index,
            writer: Mutex::new(BufWriter::new(file)),
            corrupted_lines,
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<CacheRecord> {
        self.index.get(key).map(|r| *r)
    }

    /// Appends the full record before the insert becomes visible, so a
    /// crash can lose the entry but never corrupt an indexed one.
    pub fn put(&self, key: CacheKey, record: CacheRecord) -> std::io::Result<()> {
        let line = serde_json::to_string(&DiskRow { key: key.clone(), record })
            .expect("cache rows serialize");
        {
            let mut w = self.writer.lock().expect("cache writer poisoned");
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        self.index.insert(key, record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            path: self.path.clone(),
            entries: self.index.len(),
            corrupted_lines: self.corrupted_lines,
        }
    }

    /// Drops every entry and truncates the backing file.
    pub fn purge(&self) -> std::io::Result<usize> {
        let removed = self.index.len();
        let mut w = self.writer.lock().expect("cache writer poisoned");
        self.index.clear();
        *w = BufWriter::new(File::create(&self.path)?);
        Ok(removed)
    }
}
