use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PreferenceLabel;

use super::{pearson, spearman, MetricsError};

/// Ratings are kept on a grid of `2^-20` rating points. With magnitudes below
/// `2^32` every addition on that grid is exact, so the rating sum never drifts.
const GRID: f64 = (1u64 << 20) as f64;

fn quantize(x: f64) -> f64 {
    (x * GRID).round() / GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub k_factor: f64,
    pub initial_rating: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self {
            k_factor: 32.0,
            initial_rating: 1000.0,
        }
    }
}

/// One comparison between two competitors; the label is from `a`'s side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub a: String,
    pub b: String,
    pub outcome: PreferenceLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloTable {
    pub config: EloConfig,
    pub ratings: BTreeMap<String, f64>,
}

impl EloTable {
    pub fn new<I: IntoIterator<Item = String>>(config: EloConfig, competitors: I) -> Self {
        let initial = quantize(config.initial_rating);
        Self {
            config,
            ratings: competitors.into_iter().map(|c| (c, initial)).collect(),
        }
    }

    pub fn rating(&self, key: &str) -> Option<f64> {
        self.ratings.get(key).copied()
    }

    pub fn total(&self) -> f64 {
        self.ratings.values().sum()
    }

    /// Expected score of `a` against `b`.
    pub fn expected(rating_a: f64, rating_b: f64) -> f64 {
        1.0 / (1.0 + 10f64.powf((rating_b - rating_a) / 400.0))
    }

    /// Applies one result. Matches of a competitor against itself are ignored.
    pub fn update(&mut self, a: &str, b: &str, outcome: PreferenceLabel) {
        if a == b {
            return;
        }
        let initial = quantize(self.config.initial_rating);
        let ra = *self.ratings.entry(a.to_string()).or_insert(initial);
        let rb = *self.ratings.entry(b.to_string()).or_insert(initial);
        let actual = match outcome {
            PreferenceLabel::First => 1.0,
            PreferenceLabel::Second => 0.0,
            PreferenceLabel::Tie => 0.5,
        };
        let delta = quantize(self.config.k_factor * (actual - Self::expected(ra, rb)));
        self.ratings.insert(a.to_string(), ra + delta);
        self.ratings.insert(b.to_string(), rb - delta);
    }

    /// Ratings in key order.
    pub fn vector(&self) -> Vec<f64> {
        self.ratings.values().copied().collect()
    }
}

/// Permutation of `0..n` for the given seed and stream.
pub fn shuffle_order(n: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

fn competitors(matches: &[Match]) -> BTreeSet<String> {
    matches.iter().flat_map(|m| [m.a.clone(), m.b.clone()]).collect()
}

fn run_elo(
    matches: &[Match],
    outcomes: impl Fn(usize) -> PreferenceLabel,
    order: &[usize],
    config: EloConfig,
) -> EloTable {
    let mut table = EloTable::new(config, competitors(matches));
    for &i in order {
        table.update(&matches[i].a, &matches[i].b, outcomes(i));
    }
    table
}

/// Sequential Elo over the matches in a seeded shuffled order.
pub fn elo_ratings(matches: &[Match], config: EloConfig, order_seed: u64) -> EloTable {
    let order = shuffle_order(matches.len(), order_seed, 0);
    run_elo(matches, |i| matches[i].outcome, &order, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub mean_corr: f64,
    pub std_corr: f64,
    pub mean_spearman: f64,
    pub std_spearman: f64,
    /// Mean metric-induced rating per competitor over all repeats.
    pub mean_ratings: BTreeMap<String, f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Correlation between Elo ratings from user labels and from each metric's
/// predicted labels, over `repeats` shuffles of the match order.
///
/// Repeat `r` uses [`shuffle_order`] with stream `r + 1` for both the user
/// and metric runs. Reports the mean and population standard deviation of
/// the Pearson and Spearman coefficients across repeats.
pub fn elo_correlation(
    matches: &[Match],
    predicted: &BTreeMap<String, Vec<PreferenceLabel>>,
    config: EloConfig,
    repeats: usize,
    seed: u64,
) -> Result<BTreeMap<String, CorrelationSummary>, MetricsError> {
    let n_competitors = competitors(matches).len();
    if n_competitors < 3 {
        return Err(MetricsError::TooFewPoints(n_competitors));
    }
    if repeats == 0 {
        return Err(MetricsError::NoTrials);
    }
    for labels in predicted.values() {
        if labels.len() != matches.len() {
            return Err(MetricsError::LengthMismatch(labels.len(), matches.len()));
        }
    }

    // Per repeat: (metric -> (pearson, spearman, ratings)).
    let per_repeat: Vec<BTreeMap<&str, (f64, f64, Vec<f64>)>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let order = shuffle_order(matches.len(), seed, r as u64 + 1);
            let human = run_elo(matches, |i| matches[i].outcome, &order, config).vector();
            predicted
                .iter()
                .map(|(name, labels)| {
                    let metric = run_elo(matches, |i| labels[i], &order, config).vector();
                    let p = pearson(&human, &metric)?;
                    let s = spearman(&human, &metric)?;
                    Ok((name.as_str(), (p, s, metric)))
                })
                .collect::<Result<_, MetricsError>>()
        })
        .collect::<Result<_, MetricsError>>()?;

    let keys: Vec<String> = competitors(matches).into_iter().collect();
    let mut out = BTreeMap::new();
    for name in predicted.keys() {
        let ps: Vec<f64> = per_repeat.iter().map(|m| m[name.as_str()].0).collect();
        let ss: Vec<f64> = per_repeat.iter().map(|m| m[name.as_str()].1).collect();
        let (mean_corr, std_corr) = mean_std(&ps);
        let (mean_spearman, std_spearman) = mean_std(&ss);
        let mean_ratings = keys
            .iter()
            .enumerate()
            .map(|(k, key)| {
                let sum: f64 = per_repeat.iter().map(|m| m[name.as_str()].2[k]).sum();
                (key.clone(), sum / repeats as f64)
            })
            .collect();
        out.insert(
            name.clone(),
            CorrelationSummary {
                mean_corr,
                std_corr,
                mean_spearman,
                std_spearman,
                mean_ratings,
            },
        );
    }
    Ok(out)
}
