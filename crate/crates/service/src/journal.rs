//! Append-only judgment log.
//!
//! Each record is one JSON line in the dataset ingest format, fsynced before
//! the append returns. An in-memory copy serves exports, so an export always
//! sees a prefix of the file in append order.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use prefkit_core::dataset::{parse_log, IngestError, PreferenceExample};

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
    records: RwLock<Vec<PreferenceExample>>,
    ids: RwLock<HashSet<String>>,
}

impl Journal {
    /// Opens (or creates) the log, loading any records already on disk.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref().to_path_buf();
        let existing = match File::open(&path) {
            Ok(f) => parse_log(BufReader::new(f))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let ids = existing.iter().map(|e| e.example_id.clone()).collect();
        Ok(Self {
            path,
            file: Mutex::new(file),
            records: RwLock::new(existing),
            ids: RwLock::new(ids),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably appends one record. Returns `false` without writing when a
    /// record with the same `example_id` is already present.
    pub fn append(&self, record: &PreferenceExample) -> io::Result<bool> {
        let mut file = self.file.lock().expect("journal file lock");
        if self.contains(&record.example_id) {
            return Ok(false);
        }
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()?;
        // Publish only after the bytes are durable; the file lock keeps
        // memory order identical to file order.
        self.ids
            .write()
            .expect("journal id lock")
            .insert(record.example_id.clone());
        self.records.write().expect("journal record lock").push(record.clone());
        Ok(true)
    }

    pub fn contains(&self, example_id: &str) -> bool {
        self.ids.read().expect("journal id lock").contains(example_id)
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("journal record lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records in append order, optionally only those created at or after `since`.
    pub fn snapshot(&self, since: Option<DateTime<Utc>>) -> Vec<PreferenceExample> {
        let records = self.records.read().expect("journal record lock");
        match since {
            None => records.clone(),
            Some(t) => records.iter().filter(|r| r.created_at >= t).cloned().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use prefkit_core::dataset::{ingest_log, GenerationMeta, PreferenceLabel};

    fn record(id: &str, secs: i64) -> PreferenceExample {
        let meta = GenerationMeta {
            model_name: "pool".into(),
            guidance_scale: 0.0,
            seed: 1,
            template_id: None,
        };
        PreferenceExample {
            example_id: id.into(),
            prompt_id: "p".into(),
            prompt_text: "a cat".into(),
            item_a: "x.png".into(),
            item_b: "y.png".into(),
            label: PreferenceLabel::First,
            user_id: "u".into(),
            meta_a: meta.clone(),
            meta_b: meta,
            created_at: DateTime::from_timestamp(secs, 123_456_789).unwrap(),
        }
    }

    #[test]
    fn appends_are_ingestible_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let journal = Journal::open(&path).unwrap();
        assert!(journal.append(&record("e1", 10)).unwrap());
        assert!(journal.append(&record("e2", 20)).unwrap());
        assert_eq!(ingest_log(&path).unwrap(), journal.snapshot(None));
        drop(journal);

        let reopened = Journal::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        assert!(!reopened.append(&record("e1", 30)).unwrap());
        assert_eq!(ingest_log(&path).unwrap().len(), 2);
    }

    #[test]
    fn since_filters_by_creation_time() {
        let dir = tempfile::tempdir().unwrap();
        let journal = Journal::open(dir.path().join("log.jsonl")).unwrap();
        journal.append(&record("e1", 10)).unwrap();
        journal.append(&record("e2", 20)).unwrap();
        let cut = DateTime::from_timestamp(15, 0).unwrap();
        assert_eq!(journal.snapshot(Some(cut)).len(), 1);
        let future = DateTime::from_timestamp(10_000, 0).unwrap();
        assert!(journal.snapshot(Some(future)).is_empty());
    }
}
