use std::collections::HashSet;

use anyhow::{Context, Result};
use prefkit_core::dataset::{build_splits, filter_records, ingest_log, prompt_frequency, PhraseFilter, SplitConfig};
use serde_json::json;
use tracing::info;

use crate::files::{read_list, write_json, write_jsonl, write_splits};
use crate::PreprocessArgs;

pub fn run(args: &PreprocessArgs, seed: u64) -> Result<()> {
    let examples = ingest_log(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let nsfw = match &args.nsfw {
        Some(path) => PhraseFilter::from_list(
            &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        ),
        None => PhraseFilter::new(Vec::<String>::new()),
    };
    let banned: HashSet<String> = match &args.banned {
        Some(path) => read_list(path)?.into_iter().collect(),
        None => HashSet::new(),
    };
    let total = examples.len();
    let outcome = filter_records(examples, &nsfw, &banned);
    let config = SplitConfig {
        eval_prompt_count: args.eval_prompts,
        validation_fraction: args.validation_fraction,
        seed,
    };
    let splits = build_splits(&outcome.kept, &config)?;

    write_splits(&args.out, &splits)?;
    write_jsonl(&args.out.join("dropped.jsonl"), &outcome.dropped)?;
    write_json(&args.out.join("frequencies.json"), &prompt_frequency(&splits.train))?;

    let summary = json!({
        "input": total,
        "kept": outcome.kept.len(),
        "dropped": outcome.dropped.len(),
        "train": splits.train.len(),
        "validation": splits.validation.len(),
        "test": splits.test.len(),
    });
    info!(%summary, "preprocessed");
    println!("{summary}");
    Ok(())
}
