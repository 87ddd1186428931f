use std::collections::{HashMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PreferenceExample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Prompts held out for validation and test together.
    pub eval_prompt_count: usize,
    /// Share of the held-out prompts that goes to validation; the rest is test.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            eval_prompt_count: 1000,
            validation_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validation_count(&self) -> usize {
        (self.eval_prompt_count as f64 * self.validation_fraction).floor() as usize
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need {needed} prompts from distinct users, only {available} available")]
    InsufficientPrompts { needed: usize, available: usize },
    #[error("validation_fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("split invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Vec<PreferenceExample>,
    pub validation: Vec<PreferenceExample>,
    pub test: Vec<PreferenceExample>,
}

impl DatasetSplits {
    /// Verifies prompt disjointness, one example per held-out prompt, and
    /// distinct users across held-out prompts.
    pub fn check_invariants(&self) -> Result<(), SplitError> {
        let prompts =
            |xs: &[PreferenceExample]| -> HashSet<String> { xs.iter().map(|e| e.prompt_id.clone()).collect() };
        let (train, val, test) = (prompts(&self.train), prompts(&self.validation), prompts(&self.test));
        for (a, b, name) in [
            (&train, &val, "train/validation"),
            (&train, &test, "train/test"),
            (&val, &test, "validation/test"),
        ] {
            if let Some(shared) = a.intersection(b).next() {
                return Err(SplitError::Invariant(format!("prompt {shared} shared by {name}")));
            }
        }
        if val.len() != self.validation.len() || test.len() != self.test.len() {
            return Err(SplitError::Invariant(
                "held-out split has more than one example for a prompt".into(),
            ));
        }
        let mut users = HashSet::new();
        for example in self.validation.iter().chain(&self.test) {
            if !users.insert(example.user_id.as_str()) {
                return Err(SplitError::Invariant(format!(
                    "user {} owns more than one held-out prompt",
                    example.user_id
                )));
            }
        }
        Ok(())
    }
}

/// Holds out `eval_prompt_count` prompts created by distinct users, splits
/// them between validation and test with one example each, and trains on
/// every example whose prompt was not held out.
///
/// A prompt's owner is the user of its first example in input order.
pub fn build_splits(examples: &[PreferenceExample], config: &SplitConfig) -> Result<DatasetSplits, SplitError> {
    if !(0.0..=1.0).contains(&config.validation_fraction) {
        return Err(SplitError::InvalidFraction(config.validation_fraction));
    }

    let mut prompt_order: Vec<&str> = Vec::new();
    let mut by_prompt: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, example) in examples.iter().enumerate() {
        let entry = by_prompt.entry(example.prompt_id.as_str()).or_default();
        if entry.is_empty() {
            prompt_order.push(example.prompt_id.as_str());
        }
        entry.push(idx);
    }

    let owner = |prompt: &str| examples[by_prompt[prompt][0]].user_id.as_str();
    let distinct_users: HashSet<&str> = prompt_order.iter().map(|p| owner(p)).collect();
    if distinct_users.len() < config.eval_prompt_count {
        return Err(SplitError::InsufficientPrompts {
            needed: config.eval_prompt_count,
            available: distinct_users.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut shuffled = prompt_order.clone();
    shuffled.shuffle(&mut rng);

    let mut seen_users = HashSet::new();
    let eval_prompts: Vec<&str> = shuffled
        .into_iter()
        .filter(|p| seen_users.insert(owner(p)))
        .take(config.eval_prompt_count)
        .collect();

    let n_val = config.validation_count();
    let mut splits = DatasetSplits::default();
    for (rank, prompt) in eval_prompts.iter().enumerate() {
        let chosen = *by_prompt[prompt]
            .choose(&mut rng)
            .expect("every prompt has at least one example");
        let target = if rank < n_val {
            &mut splits.validation
        } else {
            &mut splits.test
        };
        target.push(examples[chosen].clone());
    }

    let held_out: HashSet<&str> = eval_prompts.into_iter().collect();
    splits.train = examples
        .iter()
        .filter(|e| !held_out.contains(e.prompt_id.as_str()))
        .cloned()
        .collect();

    splits.check_invariants()?;
    Ok(splits)
}
