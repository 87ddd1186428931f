use anyhow::{Context, Result};
use prefkit_core::embeddings::EmbeddingStore;
use prefkit_core::scorer::{save_checkpoint, train, TrainConfig};
use serde_json::json;
use tracing::info;

use crate::files::{load_splits, write_json};
use crate::TrainArgs;

pub fn run(args: &TrainArgs, seed: u64) -> Result<()> {
    let splits = load_splits(&args.data)?;
    let store =
        EmbeddingStore::load(&args.embeddings).with_context(|| format!("reading {}", args.embeddings.display()))?;
    let config = TrainConfig {
        total_steps: args.steps,
        warmup_steps: args.warmup,
        peak_lr: args.lr,
        batch_size: args.batch,
        seed,
        eval_interval: args.eval_interval,
        objective: args.objective,
        weighting: args.weighting,
        proj_dim: args.proj_dim,
    };
    info!(
        train = splits.train.len(),
        validation = splits.validation.len(),
        "training"
    );
    let outcome = train(&config, &splits, &store)?;
    save_checkpoint(&args.out, &outcome.best).with_context(|| format!("writing {}", args.out.display()))?;

    if let Some(path) = &args.history {
        let evaluations: Vec<_> = outcome
            .history
            .iter()
            .map(|c| json!({ "step": c.step, "val_accuracy": c.val_accuracy }))
            .collect();
        write_json(path, &json!({ "evaluations": evaluations, "losses": outcome.losses }))?;
    }

    let summary = json!({
        "best_step": outcome.best.step,
        "val_accuracy": outcome.best.val_accuracy,
        "final_loss": outcome.losses.last(),
        "checkpoint": args.out,
    });
    info!(%summary, "trained");
    println!("{summary}");
    Ok(())
}
