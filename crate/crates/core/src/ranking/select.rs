use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scorer::ScoringModel;

use super::{Candidate, CandidateSet, RankingError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub prompt_id: String,
    pub item_id: String,
    pub template_id: u32,
    pub seed: i64,
    pub score: f64,
    /// Score of every candidate, in candidate order.
    pub scores: Vec<f64>,
}

/// Scores every candidate against the original (untemplated) prompt
/// embedding and returns the highest-scoring one. Equal scores go to the
/// smaller `(template_id, seed)`.
pub fn select_best(model: &ScoringModel, prompt_vec: &[f64], set: &CandidateSet) -> Result<Selection, RankingError> {
    select_best_by(set, |c| {
        model
            .score(prompt_vec, &c.embedding)
            .map_err(|e| RankingError::Scoring(e.to_string()))
    })
}

/// [`select_best`] with any scoring function. Candidates are scored in
/// parallel; the reduction runs in candidate order, so the result does not
/// depend on scheduling.
pub fn select_best_by<F>(set: &CandidateSet, score: F) -> Result<Selection, RankingError>
where
    F: Fn(&Candidate) -> Result<f64, RankingError> + Sync,
{
    if set.candidates.is_empty() {
        return Err(RankingError::NoCandidates);
    }
    let scores: Vec<f64> = set.candidates.par_iter().map(&score).collect::<Result<_, _>>()?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(RankingError::Scoring(format!(
            "candidate {} scored NaN",
            set.candidates[i].item_id
        )));
    }

    let key = |i: usize| (set.candidates[i].request.template_id, set.candidates[i].request.seed);
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && key(i) < key(best)) {
            best = i;
        }
    }
    let winner = &set.candidates[best];
    Ok(Selection {
        prompt_id: set.prompt_id.clone(),
        item_id: winner.item_id.clone(),
        template_id: winner.request.template_id,
        seed: winner.request.seed,
        score: scores[best],
        scores,
    })
}
