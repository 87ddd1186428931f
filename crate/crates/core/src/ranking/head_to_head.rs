use std::collections::{BTreeMap, HashMap};

use crate::dataset::PreferenceLabel;
use crate::embeddings::{EmbeddingStore, StoreError};
use crate::metrics::Ratios;
use crate::scorer::ScoringModel;

use super::RankingError;

/// Decides which of two items better fits a prompt.
pub trait PairJudge {
    fn judge(&self, prompt_id: &str, item_a: &str, item_b: &str) -> Result<PreferenceLabel, RankingError>;
}

fn lookup_error(e: StoreError) -> RankingError {
    RankingError::Scoring(e.to_string())
}

/// Judges by model score; exactly equal scores are a tie.
pub struct ScoreJudge<'a> {
    pub model: &'a ScoringModel,
    pub store: &'a EmbeddingStore,
}

impl PairJudge for ScoreJudge<'_> {
    fn judge(&self, prompt_id: &str, item_a: &str, item_b: &str) -> Result<PreferenceLabel, RankingError> {
        let x = self.store.prompt(prompt_id).map_err(lookup_error)?;
        let score = |item: &str| -> Result<f64, RankingError> {
            let y = self.store.item(item).map_err(lookup_error)?;
            self.model.score(x, y).map_err(|e| RankingError::Scoring(e.to_string()))
        };
        let (sa, sb) = (score(item_a)?, score(item_b)?);
        Ok(if sa > sb {
            PreferenceLabel::First
        } else if sb > sa {
            PreferenceLabel::Second
        } else {
            PreferenceLabel::Tie
        })
    }
}

/// Judges from recorded labels, looked up in either presentation order.
#[derive(Debug, Clone, Default)]
pub struct LabelJudge {
    labels: HashMap<(String, String, String), PreferenceLabel>,
}

impl LabelJudge {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prompt_id: &str, item_a: &str, item_b: &str, label: PreferenceLabel) {
        self.labels
            .insert((prompt_id.into(), item_a.into(), item_b.into()), label);
    }
}

impl PairJudge for LabelJudge {
    fn judge(&self, prompt_id: &str, item_a: &str, item_b: &str) -> Result<PreferenceLabel, RankingError> {
        let key = |a: &str, b: &str| (prompt_id.to_string(), a.to_string(), b.to_string());
        if let Some(l) = self.labels.get(&key(item_a, item_b)) {
            return Ok(*l);
        }
        if let Some(l) = self.labels.get(&key(item_b, item_a)) {
            return Ok(l.flipped());
        }
        Err(RankingError::MissingJudgment {
            prompt: prompt_id.into(),
            item_a: item_a.into(),
            item_b: item_b.into(),
        })
    }
}

/// Win/tie/lose of `challenger` against `baseline`, one judgment per prompt.
/// Both maps go from prompt id to the chosen item; identical picks are ties
/// without consulting the judge.
pub fn head_to_head(
    challenger: &BTreeMap<String, String>,
    baseline: &BTreeMap<String, String>,
    judge: &dyn PairJudge,
) -> Result<Ratios, RankingError> {
    if let Some(k) = challenger
        .keys()
        .find(|k| !baseline.contains_key(*k))
        .or_else(|| baseline.keys().find(|k| !challenger.contains_key(*k)))
    {
        return Err(RankingError::KeyMismatch(k.clone()));
    }
    let mut counts = [0usize; 3];
    for (prompt, item_c) in challenger {
        let item_b = &baseline[prompt];
        let label = if item_c == item_b {
            PreferenceLabel::Tie
        } else {
            judge.judge(prompt, item_c, item_b)?
        };
        counts[match label {
            PreferenceLabel::First => 0,
            PreferenceLabel::Tie => 1,
            PreferenceLabel::Second => 2,
        }] += 1;
    }
    Ok(Ratios::from_counts(counts[0], counts[1], counts[2]))
}
