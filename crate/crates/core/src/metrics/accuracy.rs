use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{PreferenceExample, PreferenceLabel};

use super::MetricsError;

/// Probability gap below which a tie is predicted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TieThreshold(f64);

impl TieThreshold {
    pub fn new(t: f64) -> Result<Self, MetricsError> {
        if (0.0..=1.0).contains(&t) {
            Ok(Self(t))
        } else {
            Err(MetricsError::InvalidThreshold(t))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TieThreshold {
    type Error = MetricsError;
    fn try_from(t: f64) -> Result<Self, Self::Error> {
        Self::new(t)
    }
}

impl From<TieThreshold> for f64 {
    fn from(t: TieThreshold) -> f64 {
        t.0
    }
}

/// Tie when `|p1 - p2| < t`, otherwise the more probable side.
pub fn predict_label(p_hat: [f64; 2], t: TieThreshold) -> PreferenceLabel {
    if (p_hat[0] - p_hat[1]).abs() < t.0 {
        PreferenceLabel::Tie
    } else if p_hat[0] >= p_hat[1] {
        PreferenceLabel::First
    } else {
        PreferenceLabel::Second
    }
}

/// 1 for an exact match, 0.5 when exactly one side is a tie, 0 otherwise.
pub fn tie_aware_points(label: PreferenceLabel, predicted: PreferenceLabel) -> f64 {
    if label == predicted {
        1.0
    } else if label.is_tie() || predicted.is_tie() {
        0.5
    } else {
        0.0
    }
}

/// A user judgment paired with a predictor's label for the same pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub example: PreferenceExample,
    pub predicted: Option<PreferenceLabel>,
}

pub fn tie_aware_accuracy(judgments: &[Judgment]) -> Result<f64, MetricsError> {
    if judgments.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = judgments
        .iter()
        .map(|j| {
            j.predicted
                .map(|p| tie_aware_points(j.example.label, p))
                .ok_or_else(|| MetricsError::MissingPrediction(j.example.example_id.clone()))
        })
        .sum::<Result<f64, _>>()?;
    Ok(total / judgments.len() as f64)
}

/// Mean tie-aware accuracy of predictions drawn uniformly from {a, b, tie}.
pub fn random_baseline(labels: &[PreferenceLabel], seed: u64, trials: usize) -> Result<f64, MetricsError> {
    if trials == 0 {
        return Err(MetricsError::NoTrials);
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..trials {
        let points: f64 = labels
            .iter()
            .map(|&label| {
                let guess = PreferenceLabel::ALL[rng.random_range(0..3)];
                tie_aware_points(label, guess)
            })
            .sum();
        sum += points / labels.len() as f64;
    }
    Ok(sum / trials as f64)
}
