use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{GenerationMeta, PreferenceExample, PreferenceLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub win: f64,
    pub tie: f64,
    pub lose: f64,
    pub judgments: usize,
}

impl Ratios {
    /// Ratios from counts. `lose` is the complement of the other two.
    pub fn from_counts(win: usize, tie: usize, lose: usize) -> Self {
        // `(win + tie) + lose` then rounds to exactly 1.0.
        let n = win + tie + lose;
        if n == 0 {
            return Self {
                win: 0.0,
                tie: 0.0,
                lose: 0.0,
                judgments: 0,
            };
        }
        let win_r = win as f64 / n as f64;
        let tie_r = tie as f64 / n as f64;
        Self {
            win: win_r,
            tie: tie_r,
            lose: 1.0 - (win_r + tie_r),
            judgments: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinTieLose {
    pub per_key: BTreeMap<String, Ratios>,
    /// Judgments whose two sides mapped to the same key.
    pub skipped: usize,
}

/// Win, tie and lose ratios per group key over the judgments that involve it.
pub fn win_tie_lose<F>(examples: &[PreferenceExample], group_key: F) -> WinTieLose
where
    F: Fn(&GenerationMeta) -> String,
{
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    let mut skipped = 0;
    for example in examples {
        let (ka, kb) = (group_key(&example.meta_a), group_key(&example.meta_b));
        if ka == kb {
            skipped += 1;
            continue;
        }
        let (slot_a, slot_b) = match example.label {
            PreferenceLabel::First => (0, 2),
            PreferenceLabel::Second => (2, 0),
            PreferenceLabel::Tie => (1, 1),
        };
        counts.entry(ka).or_default()[slot_a] += 1;
        counts.entry(kb).or_default()[slot_b] += 1;
    }
    WinTieLose {
        per_key: counts
            .into_iter()
            .map(|(k, [w, t, l])| (k, Ratios::from_counts(w, t, l)))
            .collect(),
        skipped,
    }
}
