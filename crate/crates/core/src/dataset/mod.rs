//! Preference judgments and the tooling that turns raw interaction logs into
//! leakage-free training, validation and test splits.

mod filter;
mod frequency;
mod ingest;
mod splits;

pub use filter::{filter_records, DropReason, DroppedRecord, FilterOutcome, PhraseFilter};
pub use frequency::{prompt_frequency, FrequencyTable};
pub use ingest::{ingest_log, parse_log, write_log, IngestError};
pub use splits::{build_splits, DatasetSplits, SplitConfig, SplitError};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Which side of a pair a user preferred.
///
/// The corresponding preference distribution is `(1, 0)`, `(0, 1)` or
/// `(0.5, 0.5)`; no other distributions are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PreferenceLabel {
    #[serde(rename = "a")]
    First,
    #[serde(rename = "b")]
    Second,
    #[serde(rename = "tie")]
    Tie,
}

impl PreferenceLabel {
    pub const ALL: [PreferenceLabel; 3] = [Self::First, Self::Second, Self::Tie];

    /// The preference distribution `(p1, p2)`.
    pub fn probs(self) -> [f64; 2] {
        match self {
            Self::First => [1.0, 0.0],
            Self::Second => [0.0, 1.0],
            Self::Tie => [0.5, 0.5],
        }
    }

    /// Inverse of [`probs`](Self::probs). Only the three exact distributions are accepted.
    pub fn from_probs(p: [f64; 2]) -> Option<Self> {
        Self::ALL.into_iter().find(|label| label.probs() == p)
    }

    pub fn is_tie(self) -> bool {
        self == Self::Tie
    }

    /// The same judgment seen from the other side of the pair.
    pub fn flipped(self) -> Self {
        match self {
            Self::First => Self::Second,
            Self::Second => Self::First,
            Self::Tie => Self::Tie,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::First => "a",
            Self::Second => "b",
            Self::Tie => "tie",
        }
    }
}

impl std::fmt::Display for PreferenceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PreferenceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(Self::First),
            "b" => Ok(Self::Second),
            "tie" => Ok(Self::Tie),
            other => Err(format!("unknown label {other:?}, expected \"a\", \"b\" or \"tie\"")),
        }
    }
}

/// How an item was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub model_name: String,
    pub guidance_scale: f64,
    pub seed: i64,
    #[serde(default)]
    pub template_id: Option<u32>,
}

impl GenerationMeta {
    pub fn validate(&self) -> Result<(), String> {
        if self.model_name.trim().is_empty() {
            return Err("model_name must be non-empty".into());
        }
        if !(self.guidance_scale >= 0.0) || !self.guidance_scale.is_finite() {
            return Err(format!(
                "guidance_scale must be a finite value >= 0, got {}",
                self.guidance_scale
            ));
        }
        Ok(())
    }
}

/// A single pairwise judgment: a prompt, two items and the user's label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub example_id: String,
    pub prompt_id: String,
    pub prompt_text: String,
    pub item_a: String,
    pub item_b: String,
    pub label: PreferenceLabel,
    pub user_id: String,
    pub meta_a: GenerationMeta,
    pub meta_b: GenerationMeta,
    pub created_at: DateTime<Utc>,
}

impl PreferenceExample {
    /// Checks the record-level invariants that serde cannot express.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.item_a == self.item_b {
            return Err(("item_b", format!("item_a and item_b are both {:?}", self.item_a)));
        }
        if self.prompt_text.trim().is_empty() {
            return Err(("prompt_text", "prompt_text is empty".into()));
        }
        self.meta_a.validate().map_err(|e| ("meta_a", e))?;
        self.meta_b.validate().map_err(|e| ("meta_b", e))?;
        Ok(())
    }
}
