use anyhow::{bail, Context, Result};
use prefkit_core::dataset::PreferenceExample;
use prefkit_core::embeddings::EmbeddingStore;
use prefkit_core::metrics::{
    predict_label, random_baseline, sweep_probabilities, threshold_grid, tie_aware_accuracy, win_tie_lose, Judgment,
    TieThreshold, WinTieLose,
};
use prefkit_core::scorer::{load_checkpoint, model_pair_probs, no_tie_accuracy, ScoringModel};
use serde::Serialize;
use tracing::info;

use crate::files::{emit_json, load_splits, write_jsonl, Prediction};
use crate::EvalArgs;

const BASELINE_TRIALS: usize = 100;

#[derive(Debug, Serialize)]
pub struct EvalReport {
    /// Tie-aware test accuracy at `best_t`.
    pub accuracy: f64,
    pub best_t: f64,
    /// Tie-aware validation accuracy at `best_t`.
    pub validation_accuracy: f64,
    /// `(t, validation accuracy)` over the grid.
    pub curve: Vec<(f64, f64)>,
    /// Test accuracy on non-tie pairs when the higher score is the prediction.
    pub no_tie_accuracy: Option<f64>,
    pub random_baseline: f64,
    pub test_examples: usize,
    pub checkpoint_step: u64,
    /// Win/tie/lose per generating model under human labels and under the scorer's labels.
    pub win_tie_lose: WinTieLoseTables,
}

#[derive(Debug, Serialize)]
pub struct WinTieLoseTables {
    pub human: WinTieLose,
    pub scorer: WinTieLose,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        bail!("tie grid must be start:stop:step, got {spec:?}");
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number {s:?} in tie grid"))
    };
    Ok(threshold_grid(num(start)?, num(stop)?, num(step)?)?)
}

fn pair_probs(model: &ScoringModel, store: &EmbeddingStore, e: &PreferenceExample) -> Result<[f64; 2]> {
    let x = store.prompt(&e.prompt_id)?;
    Ok(model_pair_probs(
        model,
        x,
        store.item(&e.item_a)?,
        store.item(&e.item_b)?,
    )?)
}

pub fn run(args: &EvalArgs, seed: u64) -> Result<()> {
    let checkpoint = load_checkpoint(&args.ckpt).with_context(|| format!("reading {}", args.ckpt.display()))?;
    let model = &checkpoint.model;
    let splits = load_splits(&args.data)?;
    let store =
        EmbeddingStore::load(&args.embeddings).with_context(|| format!("reading {}", args.embeddings.display()))?;
    let grid = parse_grid(&args.tie_grid)?;
    if splits.test.is_empty() {
        bail!("test split is empty");
    }

    let scored_validation = splits
        .validation
        .iter()
        .map(|e| Ok((e.label, pair_probs(model, &store, e)?)))
        .collect::<Result<Vec<_>>>()?;
    let sweep = sweep_probabilities(&scored_validation, &grid)?;
    let t = TieThreshold::new(sweep.best_t)?;

    let mut predictions = Vec::with_capacity(splits.test.len());
    let mut judgments = Vec::with_capacity(splits.test.len());
    let mut relabeled = Vec::with_capacity(splits.test.len());
    for example in &splits.test {
        let p = pair_probs(model, &store, example)?;
        let label = predict_label(p, t);
        predictions.push(Prediction {
            example_id: example.example_id.clone(),
            label,
            p: Some(p),
        });
        judgments.push(Judgment {
            example: example.clone(),
            predicted: Some(label),
        });
        relabeled.push(PreferenceExample {
            label,
            ..example.clone()
        });
    }

    let labels: Vec<_> = splits.test.iter().map(|e| e.label).collect();
    let by_model = |m: &prefkit_core::dataset::GenerationMeta| m.model_name.clone();
    let report = EvalReport {
        accuracy: tie_aware_accuracy(&judgments)?,
        best_t: sweep.best_t,
        validation_accuracy: sweep.best_accuracy,
        curve: sweep.curve,
        no_tie_accuracy: no_tie_accuracy(model, &splits.test, &store).ok(),
        random_baseline: random_baseline(&labels, seed, BASELINE_TRIALS)?,
        test_examples: splits.test.len(),
        checkpoint_step: checkpoint.step,
        win_tie_lose: WinTieLoseTables {
            human: win_tie_lose(&splits.test, by_model),
            scorer: win_tie_lose(&relabeled, by_model),
        },
    };
    info!(accuracy = report.accuracy, best_t = report.best_t, "evaluated");

    if let Some(path) = &args.predictions {
        write_jsonl(path, &predictions)?;
    }
    emit_json(args.report.as_deref(), &report)
}
