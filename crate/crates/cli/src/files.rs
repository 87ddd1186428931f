//! File layouts shared between subcommands.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use prefkit_core::dataset::{ingest_log, write_log, DatasetSplits, PreferenceExample, PreferenceLabel};
use serde::{Deserialize, Serialize};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VALIDATION_FILE: &str = "validation.jsonl";
pub const TEST_FILE: &str = "test.jsonl";

/// One predicted label, keyed by the judgment it predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub label: PreferenceLabel,
    /// Predicted probabilities for `(item_a, item_b)`, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<[f64; 2]>,
}

pub fn write_splits(dir: &Path, splits: &DatasetSplits) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_examples(&dir.join(TRAIN_FILE), &splits.train)?;
    write_examples(&dir.join(VALIDATION_FILE), &splits.validation)?;
    write_examples(&dir.join(TEST_FILE), &splits.test)
}

pub fn load_splits(dir: &Path) -> Result<DatasetSplits> {
    let read = |name: &str| {
        let path = dir.join(name);
        ingest_log(&path).with_context(|| format!("reading {}", path.display()))
    };
    Ok(DatasetSplits {
        train: read(TRAIN_FILE)?,
        validation: read(VALIDATION_FILE)?,
        test: read(TEST_FILE)?,
    })
}

pub fn write_examples(path: &Path, examples: &[PreferenceExample]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_log(BufWriter::new(file), examples).with_context(|| format!("writing {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes pretty JSON to `path`, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad prediction", path.display(), i + 1))?,
        );
    }
    Ok(rows)
}

/// Non-empty lines with `#` comments removed.
pub fn read_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
