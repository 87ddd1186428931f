use std::collections::BTreeMap;
use std::fs;

use anyhow::{Context, Result};
use prefkit_core::dataset::prompt_frequency;
use prefkit_core::ranking::{candidate_item_id, TemplateSet};
use prefkit_core::simulate::{simulate, Simulation, SimulatorConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use tracing::info;

use crate::files::{write_examples, write_json, write_splits};
use crate::SimulateArgs;

pub const LOG_FILE: &str = "log.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const TRUTH_FILE: &str = "ground_truth.json";
pub const CANDIDATES_FILE: &str = "candidates.json";

pub fn config_from(args: &SimulateArgs, seed: u64) -> SimulatorConfig {
    SimulatorConfig {
        n_prompts: args.n_prompts,
        n_items_per_prompt: args.n_items,
        d_in: args.d_in,
        tie_band: args.tie_band,
        noise_beta: args.beta,
        n_models: args.strengths.len(),
        planted_strengths: args.strengths.clone(),
        seed,
        pairs_per_prompt: args.pairs_per_prompt,
        truth_dim: args.truth_dim,
        n_users: args.n_users,
        eval_prompt_count: args.eval_prompts,
        ..SimulatorConfig::default()
    }
}

/// Adds ranking candidates for every test prompt to the store and returns
/// the ground-truth best candidate per prompt. Candidates come from their
/// own random stream so the dataset itself does not depend on them.
fn add_candidates(sim: &mut Simulation, seeds: u32, seed: u64) -> Result<BTreeMap<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let templates = TemplateSet::bundled();
    let d_in = sim.store.dim();
    let mut best = BTreeMap::new();
    for example in &sim.splits.test {
        let prompt_vec = sim.store.prompt(&example.prompt_id)?.to_vec();
        let mut top: Option<(f64, String)> = None;
        for template in templates.iter() {
            for s in 0..i64::from(seeds) {
                let id = candidate_item_id(&example.prompt_id, template.template_id, s);
                let v: Vec<f64> = (0..d_in).map(|_| rng.sample(StandardNormal)).collect();
                let score = sim.truth.base_score(&prompt_vec, &v);
                if top.as_ref().is_none_or(|(t, _)| score > *t) {
                    top = Some((score, id.clone()));
                }
                sim.store.insert_item(id, v)?;
            }
        }
        if let Some((_, id)) = top {
            best.insert(example.prompt_id.clone(), id);
        }
    }
    Ok(best)
}

pub fn run(args: &SimulateArgs, seed: u64) -> Result<()> {
    let config = config_from(args, seed);
    let mut sim = simulate(&config)?;
    let candidates = if args.candidate_seeds > 0 {
        Some(add_candidates(&mut sim, args.candidate_seeds, seed)?)
    } else {
        None
    };

    let out = &args.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_examples(&out.join(LOG_FILE), &sim.examples)?;
    write_splits(out, &sim.splits)?;
    write_json(&out.join("frequencies.json"), &prompt_frequency(&sim.splits.train))?;
    sim.store
        .save_text(out.join(EMBEDDINGS_FILE))
        .with_context(|| format!("writing embeddings under {}", out.display()))?;
    write_json(&out.join(TRUTH_FILE), &sim.truth)?;
    write_json(&out.join("simulator.json"), &config)?;
    if let Some(best) = &candidates {
        write_json(&out.join(CANDIDATES_FILE), best)?;
    }

    let summary = json!({
        "examples": sim.examples.len(),
        "train": sim.splits.train.len(),
        "validation": sim.splits.validation.len(),
        "test": sim.splits.test.len(),
        "embeddings": sim.store.len(),
        "out": out,
    });
    info!(%summary, "simulated");
    println!("{summary}");
    Ok(())
}
