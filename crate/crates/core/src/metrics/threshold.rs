use serde::{Deserialize, Serialize};

use crate::dataset::{PreferenceExample, PreferenceLabel};
use crate::embeddings::EmbeddingStore;
use crate::scorer::{model_pair_probs, ScoringModel};

use super::{predict_label, tie_aware_points, MetricsError, TieThreshold};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_t: f64,
    pub best_accuracy: f64,
    /// `(t, tie-aware accuracy)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// `start, start + step, ...` up to and including `stop` (within half a step).
pub fn threshold_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, MetricsError> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(MetricsError::InvalidGrid);
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (start + i as f64 * step).min(stop)).collect();
    for &t in &grid {
        TieThreshold::new(t)?;
    }
    Ok(grid)
}

/// Tie-aware accuracy of each threshold on precomputed pair probabilities.
/// The best threshold is the smallest one reaching the maximum.
pub fn sweep_probabilities(scored: &[(PreferenceLabel, [f64; 2])], grid: &[f64]) -> Result<SweepResult, MetricsError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricsError::InvalidGrid);
    }
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &t in grid {
        let threshold = TieThreshold::new(t)?;
        let points: f64 = scored
            .iter()
            .map(|&(label, p)| tie_aware_points(label, predict_label(p, threshold)))
            .sum();
        curve.push((t, points / scored.len() as f64));
    }
    let (best_t, best_accuracy) = curve
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (t, acc)| {
            if acc > best.1 {
                (t, acc)
            } else {
                best
            }
        });
    Ok(SweepResult {
        best_t,
        best_accuracy,
        curve,
    })
}

/// Scores every validation pair with the model and sweeps the grid.
pub fn threshold_sweep(
    model: &ScoringModel,
    validation: &[PreferenceExample],
    store: &EmbeddingStore,
    grid: &[f64],
) -> Result<SweepResult, MetricsError> {
    let scored = validation
        .iter()
        .map(|e| {
            let x = store.prompt(&e.prompt_id).map_err(crate::scorer::ScorerError::from)?;
            let a = store.item(&e.item_a).map_err(crate::scorer::ScorerError::from)?;
            let b = store.item(&e.item_b).map_err(crate::scorer::ScorerError::from)?;
            Ok((e.label, model_pair_probs(model, x, a, b)?))
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    sweep_probabilities(&scored, grid)
}
