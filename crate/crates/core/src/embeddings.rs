//! Frozen encoder outputs keyed by prompt and item ids.
//!
//! Two on-disk layouts are supported and detected automatically:
//!
//! * text: a first line holding the dimension `d`, then one record per line,
//!   `<key> v1 ... vd`;
//! * binary: magic `EMB1`, `u32` dimension, then records of
//!   `u32` key length, UTF-8 key bytes, `d` little-endian `f32`.
//!
//! Keys carry their namespace: `prompt:<id>` or `item:<id>`.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

const BINARY_MAGIC: &[u8; 4] = b"EMB1";
const PROMPT_PREFIX: &str = "prompt:";
const ITEM_PREFIX: &str = "item:";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("embedding file io: {0}")]
    Io(#[from] io::Error),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("vector for {key} has length {got}, expected {expected}")]
    Dimension { key: String, got: usize, expected: usize },
    #[error("no embedding for prompt {0}")]
    MissingPrompt(String),
    #[error("no embedding for item {0}")]
    MissingItem(String),
    #[error("embedding dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Namespace {
    Prompt,
    Item,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    prompts: HashMap<String, Vec<f64>>,
    items: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDimension);
        }
        Ok(Self {
            dim,
            prompts: HashMap::new(),
            items: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.prompts.len() + self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert_prompt(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<(), StoreError> {
        let id = id.into();
        self.check_len(&id, &v)?;
        self.prompts.insert(id, v);
        Ok(())
    }

    pub fn insert_item(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<(), StoreError> {
        let id = id.into();
        self.check_len(&id, &v)?;
        self.items.insert(id, v);
        Ok(())
    }

    fn check_len(&self, key: &str, v: &[f64]) -> Result<(), StoreError> {
        if v.len() != self.dim {
            return Err(StoreError::Dimension {
                key: key.to_string(),
                got: v.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    pub fn prompt(&self, id: &str) -> Result<&[f64], StoreError> {
        self.prompts
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| StoreError::MissingPrompt(id.to_string()))
    }

    pub fn item(&self, id: &str) -> Result<&[f64], StoreError> {
        self.items
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| StoreError::MissingItem(id.to_string()))
    }

    pub fn contains_item(&self, id: &str) -> bool {
        self.items.contains_key(id)
    }

    /// Records sorted by namespace then id, so serialized output is stable.
    fn sorted_records(&self) -> Vec<(String, &[f64])> {
        let mut prompts: Vec<_> = self.prompts.iter().collect();
        prompts.sort_by(|a, b| a.0.cmp(b.0));
        let mut items: Vec<_> = self.items.iter().collect();
        items.sort_by(|a, b| a.0.cmp(b.0));
        prompts
            .into_iter()
            .map(|(k, v)| (format!("{PROMPT_PREFIX}{k}"), v.as_slice()))
            .chain(
                items
                    .into_iter()
                    .map(|(k, v)| (format!("{ITEM_PREFIX}{k}"), v.as_slice())),
            )
            .collect()
    }

    fn insert_keyed(&mut self, key: &str, v: Vec<f64>, line: usize) -> Result<(), StoreError> {
        if let Some(id) = key.strip_prefix(PROMPT_PREFIX) {
            self.insert_prompt(id, v)
        } else if let Some(id) = key.strip_prefix(ITEM_PREFIX) {
            self.insert_item(id, v)
        } else {
            Err(StoreError::Format {
                line,
                message: format!("key {key:?} must start with `prompt:` or `item:`"),
            })
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.dim)?;
        for (key, v) in self.sorted_records() {
            write!(out, "{key}")?;
            for x in v {
                // `{}` on f64 prints the shortest representation that round-trips.
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for (key, v) in self.sorted_records() {
            out.write_all(&(key.len() as u32).to_le_bytes())?;
            out.write_all(key.as_bytes())?;
            for x in v {
                out.write_all(&(*x as f32).to_le_bytes())?;
            }
        }
        out.flush()
    }

    pub fn parse_text(text: &str) -> Result<Self, StoreError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(StoreError::Format {
            line: 1,
            message: "missing dimension header".into(),
        })?;
        let dim: usize = header.trim().parse().map_err(|_| StoreError::Format {
            line: 1,
            message: format!("header {header:?} is not a dimension"),
        })?;
        let mut store = Self::new(dim)?;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let mut fields = line.split_whitespace();
            let key = fields.next().expect("non-blank line has a field");
            let v = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| StoreError::Format {
                        line: line_no,
                        message: format!("{f:?} is not a number"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(StoreError::Format {
                    line: line_no,
                    message: format!("non-finite value in {key}"),
                });
            }
            store.insert_keyed(key, v, line_no)?;
        }
        Ok(store)
    }

    pub fn parse_binary(bytes: &[u8]) -> Result<Self, StoreError> {
        let truncated = |record: usize| StoreError::Format {
            line: record,
            message: "truncated binary record".into(),
        };
        if bytes.len() < 8 || &bytes[..4] != BINARY_MAGIC {
            return Err(StoreError::Format {
                line: 0,
                message: "missing EMB1 header".into(),
            });
        }
        let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let mut store = Self::new(dim)?;
        let mut pos = 8;
        let mut record = 0;
        while pos < bytes.len() {
            record += 1;
            let len_bytes = bytes.get(pos..pos + 4).ok_or_else(|| truncated(record))?;
            let key_len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
            pos += 4;
            let key_bytes = bytes.get(pos..pos + key_len).ok_or_else(|| truncated(record))?;
            let key = std::str::from_utf8(key_bytes).map_err(|_| StoreError::Format {
                line: record,
                message: "key is not UTF-8".into(),
            })?;
            pos += key_len;
            let payload = bytes.get(pos..pos + 4 * dim).ok_or_else(|| truncated(record))?;
            pos += 4 * dim;
            let v = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            store.insert_keyed(key, v, record)?;
        }
        Ok(store)
    }

    /// Loads either layout, choosing by the leading magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::parse_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| StoreError::Format {
                line: 0,
                message: "text embedding file is not UTF-8".into(),
            })?;
            Self::parse_text(&text)
        }
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_text(io::BufWriter::new(fs::File::create(path)?))
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_binary(io::BufWriter::new(fs::File::create(path)?))
    }
}
