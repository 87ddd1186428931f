use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{prompt_frequency, DatasetSplits, PreferenceExample, PreferenceLabel};
use crate::embeddings::EmbeddingStore;

use super::{loss_and_gradients, lr_at, Adam, Checkpoint, ScorerError, ScoringModel, TrainConfig};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Highest validation accuracy; the earliest step wins ties.
    pub best: Checkpoint,
    /// Every evaluated checkpoint, starting with the initialization at step 0.
    pub history: Vec<Checkpoint>,
    /// Training loss of each step's minibatch before its update.
    pub losses: Vec<f64>,
}

/// Accuracy on non-tie examples when the higher-scored item is the prediction.
/// Equal scores count as predicting the first item.
pub fn no_tie_accuracy(
    model: &ScoringModel,
    examples: &[PreferenceExample],
    store: &EmbeddingStore,
) -> Result<f64, ScorerError> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for example in examples.iter().filter(|e| !e.label.is_tie()) {
        let x = store.prompt(&example.prompt_id)?;
        let s1 = model.score(x, store.item(&example.item_a)?)?;
        let s2 = model.score(x, store.item(&example.item_b)?)?;
        let predicted = if s1 >= s2 {
            PreferenceLabel::First
        } else {
            PreferenceLabel::Second
        };
        total += 1;
        correct += usize::from(predicted == example.label);
    }
    if total == 0 {
        return Err(ScorerError::NothingToEvaluate);
    }
    Ok(correct as f64 / total as f64)
}

/// Trains a fresh model with Adam over seeded minibatches and keeps the
/// checkpoint with the best no-tie validation accuracy.
///
/// Minibatches are consecutive slices of a shuffled epoch order; the order is
/// reshuffled when fewer than `batch_size` examples remain.
pub fn train(
    config: &TrainConfig,
    splits: &DatasetSplits,
    store: &EmbeddingStore,
) -> Result<TrainOutcome, ScorerError> {
    config.validate()?;
    if config.total_steps > 0 && splits.train.is_empty() {
        return Err(ScorerError::Config("training split is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.proj_dim.unwrap_or(store.dim());
    let mut model = ScoringModel::init(store.dim(), d, &mut rng)?;
    let freqs = prompt_frequency(&splits.train);
    let mut adam = Adam::new(&model);

    let evaluate = |model: &ScoringModel, step: u64| -> Result<Checkpoint, ScorerError> {
        Ok(Checkpoint {
            step,
            model: model.clone(),
            val_accuracy: no_tie_accuracy(model, &splits.validation, store)?,
        })
    };

    let mut history = vec![evaluate(&model, 0)?];
    let mut losses = Vec::with_capacity(config.total_steps as usize);

    let n = splits.train.len();
    let batch_size = config.batch_size.min(n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let mut batch = Vec::with_capacity(batch_size);

    for step in 1..=config.total_steps {
        if cursor + batch_size > n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        batch.clear();
        batch.extend(
            order[cursor..cursor + batch_size]
                .iter()
                .map(|&i| splits.train[i].clone()),
        );
        cursor += batch_size;

        let (loss, grads) = loss_and_gradients(&model, &batch, store, &freqs, config.objective, config.weighting)
            .map_err(|e| match e {
                ScorerError::NonFinite(what) => ScorerError::Diverged {
                    step,
                    reason: format!("non-finite {what}"),
                },
                other => other,
            })?;
        losses.push(loss);

        adam.step(&mut model, &grads, lr_at(step, config)?);
        model.check_finite().map_err(|_| ScorerError::Diverged {
            step,
            reason: "non-finite parameters after update".into(),
        })?;

        if step % config.eval_interval == 0 || step == config.total_steps {
            history.push(evaluate(&model, step)?);
        }
    }

    let best = history
        .iter()
        .fold(None::<&Checkpoint>, |best, c| match best {
            Some(b) if b.val_accuracy >= c.val_accuracy => Some(b),
            _ => Some(c),
        })
        .cloned()
        .expect("history holds the initialization checkpoint");

    Ok(TrainOutcome { best, history, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{Objective, Weighting};
    use crate::simulate::{simulate, SimulatorConfig};

    fn small_sim() -> (DatasetSplits, EmbeddingStore) {
        let sim = simulate(&SimulatorConfig {
            n_prompts: 80,
            d_in: 6,
            eval_prompt_count: 20,
            seed: 11,
            ..SimulatorConfig::default()
        })
        .unwrap();
        (sim.splits, sim.store)
    }

    fn config(steps: u64) -> TrainConfig {
        TrainConfig {
            total_steps: steps,
            warmup_steps: steps / 10,
            peak_lr: 0.02,
            batch_size: 8,
            seed: 5,
            eval_interval: 10,
            objective: Objective::PairwiseKl,
            weighting: Weighting::Frequency,
            proj_dim: Some(4),
        }
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let (splits, store) = small_sim();
        let out = train(&config(0), &splits, &store).unwrap();
        assert_eq!(out.best.step, 0);
        assert_eq!(out.history.len(), 1);
        assert!(out.losses.is_empty());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let (splits, store) = small_sim();
        let a = train(&config(40), &splits, &store).unwrap();
        let b = train(&config(40), &splits, &store).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.best.model, b.best.model);
        assert_eq!(a.history.len(), 5);
    }

    #[test]
    fn training_reduces_loss() {
        let (splits, store) = small_sim();
        let out = train(&config(200), &splits, &store).unwrap();
        let head: f64 = out.losses[..20].iter().sum::<f64>() / 20.0;
        let tail: f64 = out.losses[180..].iter().sum::<f64>() / 20.0;
        assert!(tail < head, "loss did not fall: {head} -> {tail}");
    }

    #[test]
    fn best_is_earliest_maximum() {
        let (splits, store) = small_sim();
        let out = train(&config(100), &splits, &store).unwrap();
        let max = out.history.iter().map(|c| c.val_accuracy).fold(f64::MIN, f64::max);
        let first = out.history.iter().find(|c| c.val_accuracy == max).unwrap();
        assert_eq!(out.best.step, first.step);
    }

    #[test]
    fn tie_only_validation_cannot_be_evaluated() {
        let (mut splits, store) = small_sim();
        for e in &mut splits.validation {
            e.label = PreferenceLabel::Tie;
        }
        assert!(matches!(
            train(&config(0), &splits, &store),
            Err(ScorerError::NothingToEvaluate)
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let (splits, store) = small_sim();
        let mut c = config(10);
        c.warmup_steps = 20;
        assert!(matches!(train(&c, &splits, &store), Err(ScorerError::Config(_))));
    }
}
