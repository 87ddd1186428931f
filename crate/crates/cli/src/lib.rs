//! `prefkit` command line: one binary with a subcommand per pipeline stage.

pub mod commands;
pub mod files;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use prefkit_core::scorer::{Objective, Weighting};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "prefkit", version, about = "Pairwise preference learning toolkit")]
pub struct Cli {
    /// Seed for every random choice made by the subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Only log warnings and errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Emit log lines as JSON objects.
    #[arg(long, global = true)]
    pub json_logs: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Filter a judgment log and split it into train/validation/test.
    Preprocess(PreprocessArgs),
    /// Train a scorer on a preprocessed dataset.
    Train(TrainArgs),
    /// Sweep the tie threshold on validation and report test accuracy.
    Eval(EvalArgs),
    /// Correlate metric-derived Elo ratings with human-derived ones.
    Elo(EloArgs),
    /// Pick the best of templates x seeds candidates for one prompt.
    Rank(RankArgs),
    /// Run the judgment collection service.
    Serve(ServeArgs),
    /// Write a synthetic dataset with a known ground-truth scorer.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    /// Judgment log (JSONL).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Phrase list, one phrase per line.
    #[arg(long)]
    pub nsfw: Option<PathBuf>,
    /// Banned user ids, one per line.
    #[arg(long)]
    pub banned: Option<PathBuf>,
    /// Prompts held out for validation and test together.
    #[arg(long, default_value_t = 1000)]
    pub eval_prompts: usize,
    #[arg(long, default_value_t = 0.5)]
    pub validation_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Directory with train/validation/test.jsonl.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 4000)]
    pub steps: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 500)]
    pub warmup: u64,
    #[arg(long, default_value_t = 100)]
    pub eval_interval: u64,
    #[arg(long, default_value = "pairwise_kl", value_parser = parse_objective)]
    pub objective: Objective,
    #[arg(long, default_value = "frequency", value_parser = parse_weighting)]
    pub weighting: Weighting,
    /// Projection dimension; defaults to the embedding dimension.
    #[arg(long)]
    pub proj_dim: Option<usize>,
    /// Where to write the best checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON file with per-evaluation accuracies and step losses.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Threshold grid as start:stop:step.
    #[arg(long, default_value = "0:0.5:0.01")]
    pub tie_grid: String,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Writes the predicted label of every test example as JSONL.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EloArgs {
    /// Human judgments (JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated prediction files, one per metric.
    #[arg(long, value_delimiter = ',', required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 32.0)]
    pub k_factor: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub initial_rating: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Embeddings,
    Http,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub prompt: String,
    /// Id of the prompt's embedding; defaults to the prompt text.
    #[arg(long)]
    pub prompt_id: Option<String>,
    /// Template file; the bundled templates are used when omitted.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Number of seeds per template, starting at 0.
    #[arg(long, default_value_t = 5)]
    pub seeds: u32,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, value_enum, default_value_t = ProviderKind::Embeddings)]
    pub provider: ProviderKind,
    /// Holds the prompt embedding and, for the embeddings provider, the candidates.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Generator base URL for the http provider.
    #[arg(long)]
    pub url: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, env = "PREFKIT_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Directory of images to pair.
    #[arg(
        long,
        env = "PREFKIT_POOL_DIR",
        conflicts_with = "provider_url",
        required_unless_present = "provider_url"
    )]
    pub pool: Option<PathBuf>,
    /// External generator base URL.
    #[arg(long, env = "PREFKIT_PROVIDER_URL")]
    pub provider_url: Option<String>,
    /// Append-only judgment log.
    #[arg(long, env = "PREFKIT_LOG_PATH")]
    pub log: PathBuf,
    #[arg(long, env = "PREFKIT_LIMIT", default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    pub limit: u32,
    #[arg(long, env = "PREFKIT_RATE_PER_MIN", default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    pub rate_per_min: u32,
    #[arg(long, env = "PREFKIT_NSFW_FILE")]
    pub nsfw: Option<PathBuf>,
    /// Comma-separated login tokens.
    #[arg(long, env = "PREFKIT_TOKENS", value_delimiter = ',')]
    #[serde(skip)]
    pub tokens: Vec<String>,
    #[arg(long, env = "PREFKIT_TOKENS_FILE")]
    pub tokens_file: Option<PathBuf>,
    #[arg(long, env = "PREFKIT_ADMIN_TOKEN")]
    #[serde(skip)]
    pub admin_token: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    pub n_prompts: usize,
    #[arg(long, default_value_t = 2)]
    pub n_items: usize,
    #[arg(long, default_value_t = 1)]
    pub pairs_per_prompt: usize,
    #[arg(long, default_value_t = 16)]
    pub d_in: usize,
    #[arg(long, default_value_t = 3)]
    pub truth_dim: usize,
    #[arg(long, default_value_t = 8.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tie_band: f64,
    /// Comma-separated planted model strengths, one per model.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub strengths: Vec<f64>,
    #[arg(long)]
    pub n_users: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub eval_prompts: usize,
    /// Also write ranking candidates (bundled templates x this many seeds) for test prompts.
    #[arg(long, default_value_t = 0)]
    pub candidate_seeds: u32,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse()
}

/// Runs the parsed command.
pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Preprocess(args) => commands::preprocess::run(args, cli.seed),
        Command::Train(args) => commands::train::run(args, cli.seed),
        Command::Eval(args) => commands::eval::run(args, cli.seed),
        Command::Elo(args) => commands::elo::run(args, cli.seed),
        Command::Rank(args) => commands::rank::run(args),
        Command::Serve(args) => commands::serve::run(args),
        Command::Simulate(args) => commands::simulate::run(args, cli.seed),
    }
}

/// The command and its fully resolved flags, for logging before a run.
pub fn resolved_config(cli: &Cli) -> serde_json::Value {
    let mut value = serde_json::to_value(&cli.command).expect("arguments serialize");
    if let Some(map) = value.as_object_mut() {
        map.insert("seed".into(), cli.seed.into());
    }
    value
}
