//! Training on simulated labels recovers the hidden scorer.

use prefkit_core::metrics::spearman;
use prefkit_core::scorer::{train, Objective, ScoringModel, TrainConfig, Weighting};
use prefkit_core::simulate::{simulate, Simulation, SimulatorConfig};

fn train_config(seed: u64, truth_dim: usize) -> TrainConfig {
    TrainConfig {
        total_steps: 2000,
        warmup_steps: 100,
        peak_lr: 1e-2,
        batch_size: 32,
        seed,
        eval_interval: 100,
        objective: Objective::PairwiseKl,
        weighting: Weighting::Frequency,
        proj_dim: Some(truth_dim),
    }
}

/// Spearman between learned and hidden score differences over held-out pairs.
fn held_out_spearman(sim: &Simulation, model: &ScoringModel) -> f64 {
    let (mut learned, mut hidden) = (Vec::new(), Vec::new());
    for e in sim.splits.validation.iter().chain(&sim.splits.test) {
        let x = sim.store.prompt(&e.prompt_id).unwrap();
        let a = sim.store.item(&e.item_a).unwrap();
        let b = sim.store.item(&e.item_b).unwrap();
        learned.push(model.score(x, a).unwrap() - model.score(x, b).unwrap());
        hidden.push(sim.truth.score(x, a, &e.meta_a.model_name) - sim.truth.score(x, b, &e.meta_b.model_name));
    }
    spearman(&learned, &hidden).unwrap()
}

#[test]
fn recovers_hidden_scorer_with_ample_data() {
    for seed in 0..4 {
        let sim_config = SimulatorConfig {
            n_prompts: 2000,
            eval_prompt_count: 200,
            seed,
            ..SimulatorConfig::default()
        };
        let sim = simulate(&sim_config).unwrap();
        let out = train(&train_config(seed, sim_config.truth_dim), &sim.splits, &sim.store).unwrap();
        let rho = held_out_spearman(&sim, &out.best.model);
        assert!(
            out.best.val_accuracy >= 0.95,
            "seed {seed}: accuracy {}",
            out.best.val_accuracy
        );
        assert!(rho >= 0.95, "seed {seed}: spearman {rho}");
    }
}

#[test]
fn in_batch_objective_also_learns() {
    let sim = simulate(&SimulatorConfig {
        n_prompts: 2000,
        eval_prompt_count: 200,
        ..SimulatorConfig::default()
    })
    .unwrap();
    let config = TrainConfig {
        objective: Objective::InBatch,
        ..train_config(0, 3)
    };
    let out = train(&config, &sim.splits, &sim.store).unwrap();
    assert!(out.best.val_accuracy > out.history[0].val_accuracy);
    assert!(out.best.val_accuracy >= 0.85, "{}", out.best.val_accuracy);
}
