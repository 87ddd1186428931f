//! Preference learning and evaluation over precomputed embeddings.
//!
//! * [`dataset`]: judgment records, filtering, leakage-free splits.
//! * [`embeddings`]: frozen feature store.
//! * [`scorer`]: projection-head scoring model, KL preference objective,
//!   analytic gradients and training.
//! * [`metrics`]: tie-aware accuracy, threshold sweeps, Elo, correlations,
//!   Fréchet distance.
//! * [`ranking`]: best-of-N candidate expansion and selection.
//! * [`simulate`]: synthetic data with a known ground-truth scorer.

pub mod dataset;
pub mod embeddings;
pub mod metrics;
pub mod ranking;
pub mod scorer;
pub mod simulate;
