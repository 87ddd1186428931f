//! Analytic gradients against finite differences.
//!
//! The oracle is Richardson-extrapolated central differences,
//! `(4 D(h/2) - D(h)) / 3`, whose O(h^4) truncation error stays well below the
//! tolerance even where the normalized projections are sharply curved.

use chrono::DateTime;
use prefkit_core::dataset::{prompt_frequency, FrequencyTable, GenerationMeta, PreferenceExample, PreferenceLabel};
use prefkit_core::embeddings::EmbeddingStore;
use prefkit_core::scorer::{batch_loss, gradients, Objective, ScoringModel, Weighting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const H: f64 = 1e-4;
const REL_TOL: f64 = 1e-4;
/// Denominator floor so entries that are zero up to round-off compare absolutely.
const ABS_FLOOR: f64 = 1e-6;

struct Instance {
    model: ScoringModel,
    batch: Vec<PreferenceExample>,
    store: EmbeddingStore,
    freqs: FrequencyTable,
}

fn meta() -> GenerationMeta {
    GenerationMeta {
        model_name: "m".into(),
        guidance_scale: 7.5,
        seed: 0,
        template_id: None,
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let d_in = rng.random_range(3..=8);
    let d = rng.random_range(2..=4);
    let batch_size = rng.random_range(1..=4);
    let model = ScoringModel::init(d_in, d, rng).unwrap();
    let mut store = EmbeddingStore::new(d_in).unwrap();
    // Standard normal features, the same distribution the simulator produces.
    let vec = |rng: &mut ChaCha8Rng| (0..d_in).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>();
    let mut batch = Vec::new();
    for i in 0..batch_size {
        // Two prompts shared across the batch so frequencies differ.
        let prompt_id = format!("p{}", i % 2);
        if store.prompt(&prompt_id).is_err() {
            store.insert_prompt(prompt_id.clone(), vec(rng)).unwrap();
        }
        let (a, b) = (format!("i{i}a"), format!("i{i}b"));
        store.insert_item(a.clone(), vec(rng)).unwrap();
        store.insert_item(b.clone(), vec(rng)).unwrap();
        batch.push(PreferenceExample {
            example_id: format!("e{i}"),
            prompt_id: prompt_id.clone(),
            prompt_text: prompt_id,
            item_a: a,
            item_b: b,
            label: PreferenceLabel::ALL[rng.random_range(0..3)],
            user_id: "u".into(),
            meta_a: meta(),
            meta_b: meta(),
            created_at: DateTime::UNIX_EPOCH,
        });
    }
    let freqs = prompt_frequency(&batch);
    Instance {
        model,
        batch,
        store,
        freqs,
    }
}

fn with_params(model: &ScoringModel, flat: &[f64]) -> ScoringModel {
    let n = model.text_projection().len();
    ScoringModel::from_parts(
        model.input_dim(),
        model.proj_dim(),
        flat[..n].to_vec(),
        flat[n..2 * n].to_vec(),
        flat[2 * n],
    )
    .unwrap()
}

fn flat_params(model: &ScoringModel) -> Vec<f64> {
    let mut out = model.text_projection().to_vec();
    out.extend_from_slice(model.image_projection());
    out.push(model.log_temperature());
    out
}

/// Largest relative error over every gradient entry.
fn worst_relative_error(inst: &Instance, objective: Objective, weighting: Weighting) -> f64 {
    let loss = |m: &ScoringModel| batch_loss(m, &inst.batch, &inst.store, &inst.freqs, objective, weighting).unwrap();
    let analytic = gradients(&inst.model, &inst.batch, &inst.store, &inst.freqs, objective, weighting)
        .unwrap()
        .flatten();
    let base = flat_params(&inst.model);
    let mut worst: f64 = 0.0;
    for (k, a) in analytic.iter().enumerate() {
        let central = |h: f64| {
            let mut plus = base.clone();
            plus[k] += h;
            let mut minus = base.clone();
            minus[k] -= h;
            (loss(&with_params(&inst.model, &plus)) - loss(&with_params(&inst.model, &minus))) / (2.0 * h)
        };
        let numeric = (4.0 * central(H / 2.0) - central(H)) / 3.0;
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(ABS_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

const SETTINGS: [(Objective, Weighting); 4] = [
    (Objective::PairwiseKl, Weighting::Frequency),
    (Objective::PairwiseKl, Weighting::Uniform),
    (Objective::InBatch, Weighting::Frequency),
    (Objective::InBatch, Weighting::Uniform),
];

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        for (objective, weighting) in SETTINGS {
            let err = worst_relative_error(&inst, objective, weighting);
            assert!(err < REL_TOL, "{objective:?}/{weighting:?}: relative error {err:e}");
            worst = worst.max(err);
        }
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn gradient_at_calibrated_point_has_flat_temperature() {
    // One pair with label probabilities equal to the model's: the loss is at
    // its minimum along log_t, so the analytic and numeric slopes vanish.
    let model = ScoringModel::identity(2, 0.0).unwrap();
    let mut store = EmbeddingStore::new(2).unwrap();
    store.insert_prompt("p", vec![1.0, 0.0]).unwrap();
    store.insert_item("a", vec![1.0, 0.0]).unwrap();
    store.insert_item("b", vec![1.0, 0.0]).unwrap();
    let batch = vec![PreferenceExample {
        example_id: "e".into(),
        prompt_id: "p".into(),
        prompt_text: "p".into(),
        item_a: "a".into(),
        item_b: "b".into(),
        label: PreferenceLabel::Tie,
        user_id: "u".into(),
        meta_a: meta(),
        meta_b: meta(),
        created_at: DateTime::UNIX_EPOCH,
    }];
    let freqs = prompt_frequency(&batch);
    let g = gradients(
        &model,
        &batch,
        &store,
        &freqs,
        Objective::PairwiseKl,
        Weighting::Uniform,
    )
    .unwrap();
    assert!(g.log_t.abs() < 1e-15);
    let inst = Instance {
        model,
        batch,
        store,
        freqs,
    };
    assert!(worst_relative_error(&inst, Objective::PairwiseKl, Weighting::Uniform) < REL_TOL);
}
