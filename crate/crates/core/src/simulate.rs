//! Synthetic preference data with a known ground-truth scorer.
//!
//! Prompts and items get Gaussian feature vectors. A hidden scorer
//! `s*(x, y) = scale * cos(x A, y B)` plus a per-model planted strength
//! decides every label through a Bradley-Terry draw
//! `P(first preferred) = sigmoid(beta * (s*_1 - s*_2))`, with a tie whenever
//! the score gap is below `tie_band`.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    build_splits, DatasetSplits, GenerationMeta, PreferenceExample, PreferenceLabel, SplitConfig, SplitError,
};
use crate::embeddings::{EmbeddingStore, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorConfig {
    pub n_prompts: usize,
    /// Items generated per prompt; judged pairs are drawn among them.
    pub n_items_per_prompt: usize,
    pub d_in: usize,
    /// Score gaps strictly below this are labeled ties.
    pub tie_band: f64,
    /// Bradley-Terry sharpness; `f64::INFINITY` makes labels the deterministic argmax.
    pub noise_beta: f64,
    pub n_models: usize,
    /// Added to the hidden score of every item the model generated.
    pub planted_strengths: Vec<f64>,
    pub seed: u64,
    /// Judgments per prompt.
    pub pairs_per_prompt: usize,
    /// Inner dimension of the hidden projections.
    pub truth_dim: usize,
    /// Multiplier on the hidden cosine similarity.
    pub score_scale: f64,
    /// Number of distinct users; prompt `p` belongs to user `p mod n_users`.
    /// `None` gives every prompt its own user.
    pub n_users: Option<usize>,
    /// Held-out prompts for validation and test.
    pub eval_prompt_count: usize,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            n_prompts: 500,
            n_items_per_prompt: 2,
            d_in: 16,
            tie_band: 0.0,
            noise_beta: 8.0,
            n_models: 1,
            planted_strengths: vec![0.0],
            seed: 0,
            pairs_per_prompt: 1,
            truth_dim: 3,
            score_scale: 4.0,
            n_users: None,
            eval_prompt_count: 100,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let fail = |m: &str| Err(SimulationError::Config(m.to_string()));
        if self.n_prompts == 0 || self.d_in == 0 || self.truth_dim == 0 {
            return fail("n_prompts, d_in and truth_dim must be positive");
        }
        if self.n_items_per_prompt < 2 {
            return fail("n_items_per_prompt must be at least 2");
        }
        if self.pairs_per_prompt == 0 {
            return fail("pairs_per_prompt must be at least 1");
        }
        if !(self.tie_band >= 0.0) {
            return fail("tie_band must be >= 0");
        }
        if !(self.noise_beta > 0.0) {
            return fail("noise_beta must be > 0");
        }
        if self.n_models == 0 || self.planted_strengths.len() != self.n_models {
            return fail("planted_strengths must list one strength per model");
        }
        if self.planted_strengths.iter().any(|s| !s.is_finite()) || !self.score_scale.is_finite() {
            return fail("strengths and score_scale must be finite");
        }
        if self.n_users == Some(0) {
            return fail("n_users must be positive");
        }
        Ok(())
    }
}

/// The hidden scorer that generated the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub d_in: usize,
    pub truth_dim: usize,
    /// Row-major `d_in x truth_dim`.
    pub text_proj: Vec<f64>,
    pub image_proj: Vec<f64>,
    pub score_scale: f64,
    pub noise_beta: f64,
    pub tie_band: f64,
    /// Planted strength per model name.
    pub strengths: BTreeMap<String, f64>,
}

impl GroundTruth {
    fn project(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.truth_dim];
        for (xi, row) in x.iter().zip(w.chunks_exact(self.truth_dim)) {
            for (o, wij) in out.iter_mut().zip(row) {
                *o += xi * wij;
            }
        }
        out
    }

    /// Hidden quality of an item for a prompt, without model strength.
    pub fn base_score(&self, prompt_vec: &[f64], item_vec: &[f64]) -> f64 {
        let u = self.project(&self.text_proj, prompt_vec);
        let v = self.project(&self.image_proj, item_vec);
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        self.score_scale * dot / (nu * nv)
    }

    pub fn score(&self, prompt_vec: &[f64], item_vec: &[f64], model_name: &str) -> f64 {
        self.base_score(prompt_vec, item_vec) + self.strengths.get(model_name).copied().unwrap_or(0.0)
    }

    /// Probability that the first item is preferred, given a non-tie outcome is drawn.
    pub fn prefer_first_prob(&self, score_gap: f64) -> f64 {
        if self.noise_beta.is_infinite() {
            return match score_gap.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => 1.0,
                Some(std::cmp::Ordering::Less) => 0.0,
                _ => 0.5,
            };
        }
        1.0 / (1.0 + (-self.noise_beta * score_gap).exp())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Every judgment in generation order.
    pub examples: Vec<PreferenceExample>,
    pub splits: DatasetSplits,
    pub store: EmbeddingStore,
    pub truth: GroundTruth,
}

pub fn model_name(index: usize) -> String {
    format!("model-{index}")
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
}

pub fn simulate(config: &SimulatorConfig) -> Result<Simulation, SimulationError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let truth_scale = 1.0 / (config.d_in as f64).sqrt();
    let mut scaled = |n| -> Vec<f64> { gaussian_vec(&mut rng, n).into_iter().map(|x| x * truth_scale).collect() };
    let text_proj = scaled(config.d_in * config.truth_dim);
    let image_proj = scaled(config.d_in * config.truth_dim);
    let truth = GroundTruth {
        d_in: config.d_in,
        truth_dim: config.truth_dim,
        text_proj,
        image_proj,
        score_scale: config.score_scale,
        noise_beta: config.noise_beta,
        tie_band: config.tie_band,
        strengths: config
            .planted_strengths
            .iter()
            .enumerate()
            .map(|(m, s)| (model_name(m), *s))
            .collect(),
    };

    let n_users = config.n_users.unwrap_or(config.n_prompts);
    let mut store = EmbeddingStore::new(config.d_in)?;
    let mut examples = Vec::with_capacity(config.n_prompts * config.pairs_per_prompt);

    for p in 0..config.n_prompts {
        let prompt_id = format!("p{p:05}");
        let prompt_vec = gaussian_vec(&mut rng, config.d_in);
        store.insert_prompt(prompt_id.clone(), prompt_vec.clone())?;

        // Consecutive items cycle through models from a random offset, so any
        // two adjacent items come from different models when n_models >= 2.
        let offset = rng.random_range(0..config.n_models);
        let items: Vec<(String, GenerationMeta, f64)> = (0..config.n_items_per_prompt)
            .map(|j| {
                let id = format!("{prompt_id}-i{j:02}");
                let vec = gaussian_vec(&mut rng, config.d_in);
                let model = (offset + j) % config.n_models;
                let meta = GenerationMeta {
                    model_name: model_name(model),
                    guidance_scale: 3.0 + 2.0 * model as f64,
                    seed: j as i64,
                    template_id: None,
                };
                let score = truth.score(&prompt_vec, &vec, &meta.model_name);
                store.insert_item(id.clone(), vec)?;
                Ok((id, meta, score))
            })
            .collect::<Result<_, StoreError>>()?;

        for _ in 0..config.pairs_per_prompt {
            let picked = index::sample(&mut rng, items.len(), 2);
            let (a, b) = (&items[picked.index(0)], &items[picked.index(1)]);
            let gap = a.2 - b.2;
            let label = if gap.abs() < config.tie_band {
                PreferenceLabel::Tie
            } else if rng.random::<f64>() < truth.prefer_first_prob(gap) {
                PreferenceLabel::First
            } else {
                PreferenceLabel::Second
            };
            let n = examples.len();
            examples.push(PreferenceExample {
                example_id: format!("e{n:07}"),
                prompt_id: prompt_id.clone(),
                prompt_text: format!("synthetic prompt {p}"),
                item_a: a.0.clone(),
                item_b: b.0.clone(),
                label,
                user_id: format!("u{:05}", p % n_users),
                meta_a: a.1.clone(),
                meta_b: b.1.clone(),
                created_at: start_time() + Duration::seconds(n as i64),
            });
        }
    }

    let splits = build_splits(
        &examples,
        &SplitConfig {
            eval_prompt_count: config.eval_prompt_count,
            validation_fraction: 0.5,
            seed: config.seed,
        },
    )?;

    Ok(Simulation {
        examples,
        splits,
        store,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_beta_gives_argmax_labels() {
        let sim = simulate(&SimulatorConfig {
            n_prompts: 200,
            noise_beta: f64::INFINITY,
            eval_prompt_count: 10,
            ..SimulatorConfig::default()
        })
        .unwrap();
        for e in &sim.examples {
            let x = sim.store.prompt(&e.prompt_id).unwrap();
            let sa = sim
                .truth
                .score(x, sim.store.item(&e.item_a).unwrap(), &e.meta_a.model_name);
            let sb = sim
                .truth
                .score(x, sim.store.item(&e.item_b).unwrap(), &e.meta_b.model_name);
            let expected = if sa > sb {
                PreferenceLabel::First
            } else {
                PreferenceLabel::Second
            };
            assert_eq!(e.label, expected);
        }
    }

    #[test]
    fn huge_tie_band_gives_all_ties() {
        let sim = simulate(&SimulatorConfig {
            n_prompts: 50,
            tie_band: 1e6,
            eval_prompt_count: 10,
            ..SimulatorConfig::default()
        })
        .unwrap();
        assert!(sim.examples.iter().all(|e| e.label.is_tie()));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SimulatorConfig {
            n_prompts: 60,
            eval_prompt_count: 10,
            seed: 7,
            ..SimulatorConfig::default()
        };
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.examples, b.examples);
        assert_eq!(a.store, b.store);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn adjacent_items_use_different_models() {
        let sim = simulate(&SimulatorConfig {
            n_prompts: 100,
            n_models: 3,
            planted_strengths: vec![0.0, 1.0, 2.0],
            eval_prompt_count: 10,
            ..SimulatorConfig::default()
        })
        .unwrap();
        assert!(sim.examples.iter().all(|e| e.meta_a.model_name != e.meta_b.model_name));
    }

    #[test]
    fn counts_and_ownership() {
        let sim = simulate(&SimulatorConfig {
            n_prompts: 30,
            n_items_per_prompt: 5,
            pairs_per_prompt: 4,
            n_users: Some(15),
            eval_prompt_count: 10,
            ..SimulatorConfig::default()
        })
        .unwrap();
        assert_eq!(sim.examples.len(), 120);
        assert_eq!(sim.store.len(), 30 + 150);
        sim.splits.check_invariants().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            SimulatorConfig {
                n_items_per_prompt: 1,
                ..SimulatorConfig::default()
            },
            SimulatorConfig {
                noise_beta: 0.0,
                ..SimulatorConfig::default()
            },
            SimulatorConfig {
                n_models: 2,
                ..SimulatorConfig::default()
            },
            SimulatorConfig {
                tie_band: -1.0,
                ..SimulatorConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(simulate(&cfg), Err(SimulationError::Config(_))));
        }
    }
}
