//! The trainable preference scorer.
//!
//! A [`ScoringModel`] maps frozen prompt and item features through linear
//! heads, L2-normalizes them and returns their temperature-scaled inner
//! product. Training minimizes the KL divergence between a user's preference
//! distribution and the softmax over the pair's scores, with per-example
//! weights inversely proportional to prompt frequency.

mod checkpoint;
mod grad;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointError,
};
pub use grad::{batch_loss, gradients, loss_and_gradients, Gradients};
pub use loss::{model_pair_probs, pair_probs, pref_loss};
pub use model::ScoringModel;
pub use optim::{lr_at, Adam};
pub use train::{no_tie_accuracy, train, TrainOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::StoreError;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("predicted probabilities {0:?} must lie strictly inside (0, 1) and sum to 1")]
    InvalidProbabilities([f64; 2]),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("prompt {0} has no frequency entry")]
    MissingFrequency(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("step {step} outside schedule of {total} steps")]
    StepOutOfRange { step: u64, total: u64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: u64, reason: String },
    #[error("no non-tie examples to evaluate")]
    NothingToEvaluate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Softmax over the example's own two items.
    PairwiseKl,
    /// Softmax over every item in the batch; the target keeps its mass on the example's own pair.
    InBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Weight `1 / freq(prompt)`, normalized by the batch's weight sum.
    Frequency,
    Uniform,
}

impl std::str::FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pairwise_kl" => Ok(Self::PairwiseKl),
            "in_batch" => Ok(Self::InBatch),
            _ => Err(format!("unknown objective {s:?}")),
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frequency" => Ok(Self::Frequency),
            "uniform" => Ok(Self::Uniform),
            _ => Err(format!("unknown weighting {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub peak_lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_interval: u64,
    pub objective: Objective,
    pub weighting: Weighting,
    /// Projection dimension; `None` uses the embedding dimension.
    #[serde(default)]
    pub proj_dim: Option<usize>,
}

impl Default for TrainConfig {
    /// Step count, warmup, batch size and learning rate of the full-scale
    /// CLIP-H finetuning recipe. Desk-scale runs over frozen features need a
    /// much larger learning rate.
    fn default() -> Self {
        Self {
            total_steps: 4000,
            warmup_steps: 500,
            peak_lr: 3e-6,
            batch_size: 128,
            seed: 0,
            eval_interval: 100,
            objective: Objective::PairwiseKl,
            weighting: Weighting::Frequency,
            proj_dim: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ScorerError> {
        if self.warmup_steps > self.total_steps {
            return Err(ScorerError::Config(format!(
                "warmup_steps {} exceeds total_steps {}",
                self.warmup_steps, self.total_steps
            )));
        }
        if !(self.peak_lr > 0.0) || !self.peak_lr.is_finite() {
            return Err(ScorerError::Config(format!(
                "peak_lr must be > 0, got {}",
                self.peak_lr
            )));
        }
        if self.batch_size == 0 {
            return Err(ScorerError::Config("batch_size must be >= 1".into()));
        }
        if self.eval_interval == 0 {
            return Err(ScorerError::Config("eval_interval must be >= 1".into()));
        }
        if self.proj_dim == Some(0) {
            return Err(ScorerError::Config("proj_dim must be >= 1".into()));
        }
        Ok(())
    }
}
