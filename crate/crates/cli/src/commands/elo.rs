use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use prefkit_core::dataset::{ingest_log, PreferenceLabel};
use prefkit_core::metrics::{
    elo_correlation, tie_aware_accuracy, win_tie_lose, CorrelationSummary, EloConfig, Judgment, Match, WinTieLose,
};
use serde::Serialize;
use tracing::info;

use crate::files::{emit_json, read_predictions};
use crate::EloArgs;

/// Key under which human labels take part in the shuffle repeats.
const HUMAN: &str = "human";

#[derive(Debug, Serialize)]
pub struct EloReport {
    pub repeats: usize,
    pub seed: u64,
    pub config: EloConfig,
    pub judgments: usize,
    /// Mean human-label rating of each generating model over the repeats.
    pub human_ratings: BTreeMap<String, f64>,
    pub human_win_tie_lose: WinTieLose,
    pub metrics: BTreeMap<String, MetricReport>,
}

#[derive(Debug, Serialize)]
pub struct MetricReport {
    /// Tie-aware agreement with the human labels.
    pub accuracy: f64,
    pub elo: CorrelationSummary,
}

fn metric_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn run(args: &EloArgs, seed: u64) -> Result<()> {
    let examples = ingest_log(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let matches: Vec<Match> = examples
        .iter()
        .map(|e| Match {
            a: e.meta_a.model_name.clone(),
            b: e.meta_b.model_name.clone(),
            outcome: e.label,
        })
        .collect();

    let mut predicted: BTreeMap<String, Vec<PreferenceLabel>> = BTreeMap::new();
    predicted.insert(HUMAN.into(), examples.iter().map(|e| e.label).collect());
    for path in &args.metrics {
        let name = metric_name(path);
        if predicted.contains_key(&name) {
            bail!("metric name {name:?} is used twice");
        }
        let by_id: HashMap<String, PreferenceLabel> = read_predictions(path)?
            .into_iter()
            .map(|p| (p.example_id, p.label))
            .collect();
        let labels = examples
            .iter()
            .map(|e| {
                by_id
                    .get(&e.example_id)
                    .copied()
                    .ok_or_else(|| anyhow!("{} has no prediction for {}", path.display(), e.example_id))
            })
            .collect::<Result<Vec<_>>>()?;
        predicted.insert(name, labels);
    }

    let config = EloConfig {
        k_factor: args.k_factor,
        initial_rating: args.initial_rating,
    };
    let mut summaries = elo_correlation(&matches, &predicted, config, args.repeats, seed)?;
    let human = summaries.remove(HUMAN).expect("human labels were included");

    let mut metrics = BTreeMap::new();
    for (name, elo) in summaries {
        let judgments: Vec<Judgment> = examples
            .iter()
            .zip(&predicted[&name])
            .map(|(e, &label)| Judgment {
                example: e.clone(),
                predicted: Some(label),
            })
            .collect();
        info!(metric = %name, mean_corr = elo.mean_corr, std_corr = elo.std_corr, "elo correlation");
        metrics.insert(
            name,
            MetricReport {
                accuracy: tie_aware_accuracy(&judgments)?,
                elo,
            },
        );
    }

    let report = EloReport {
        repeats: args.repeats,
        seed,
        config,
        judgments: examples.len(),
        human_ratings: human.mean_ratings,
        human_win_tie_lose: win_tie_lose(&examples, |m| m.model_name.clone()),
        metrics,
    };
    emit_json(args.report.as_deref(), &report)
}
