//! Evaluation protocol for preference predictors and generative models.

mod accuracy;
mod correlation;
mod elo;
mod frechet;
mod threshold;
mod winrate;

pub use accuracy::{predict_label, random_baseline, tie_aware_accuracy, tie_aware_points, Judgment, TieThreshold};
pub use correlation::{pearson, spearman};
pub use elo::{elo_correlation, elo_ratings, shuffle_order, CorrelationSummary, EloConfig, EloTable, Match};
pub use frechet::{frechet_distance, gaussian_fit};
pub use threshold::{sweep_probabilities, threshold_grid, threshold_sweep, SweepResult};
pub use winrate::{win_tie_lose, Ratios, WinTieLose};

use thiserror::Error;

use crate::scorer::ScorerError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no judgments to score")]
    Empty,
    #[error("judgment {0} has no prediction")]
    MissingPrediction(String),
    #[error("tie threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("threshold grid must be non-empty and ascending")]
    InvalidGrid,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance input")]
    ZeroVariance,
    #[error("feature sets need at least 2 vectors each, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("trials must be >= 1")]
    NoTrials,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}
