use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use super::PreferenceExample;

const REQUIRED_FIELDS: [&str; 10] = [
    "example_id",
    "prompt_id",
    "prompt_text",
    "item_a",
    "item_b",
    "label",
    "user_id",
    "meta_a",
    "meta_b",
    "created_at",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read judgment log: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
}

impl IngestError {
    fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Reads a judgment JSONL file. Blank lines are skipped; line numbers are 1-based.
pub fn ingest_log(path: impl AsRef<Path>) -> Result<Vec<PreferenceExample>, IngestError> {
    let file = File::open(path)?;
    parse_log(BufReader::new(file))
}

pub fn parse_log(reader: impl BufRead) -> Result<Vec<PreferenceExample>, IngestError> {
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        examples.push(parse_line(idx + 1, &line)?);
    }
    Ok(examples)
}

fn parse_line(line_no: usize, line: &str) -> Result<PreferenceExample, IngestError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| IngestError::parse(line_no, "<record>", e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| IngestError::parse(line_no, "<record>", "expected a JSON object"))?;
    if let Some(missing) = REQUIRED_FIELDS.iter().find(|f| !object.contains_key(**f)) {
        return Err(IngestError::parse(line_no, *missing, "missing field"));
    }

    let example: PreferenceExample = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        IngestError::parse(line_no, field, e.into_inner().to_string())
    })?;
    example
        .validate()
        .map_err(|(field, message)| IngestError::parse(line_no, field, message))?;
    Ok(example)
}

/// Writes examples as judgment JSONL, one object per line.
pub fn write_log<W: Write>(mut out: W, examples: &[PreferenceExample]) -> io::Result<()> {
    for example in examples {
        serde_json::to_writer(&mut out, example)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
