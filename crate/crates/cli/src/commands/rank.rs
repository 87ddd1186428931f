use anyhow::{bail, Context, Result};
use prefkit_core::embeddings::EmbeddingStore;
use prefkit_core::ranking::{
    expand_candidates, select_best, CandidateProvider, EmbeddingProvider, Selection, TemplateSet,
};
use prefkit_core::scorer::load_checkpoint;
use prefkit_service::HttpCandidateProvider;
use serde::Serialize;
use tracing::{info, warn};

use crate::files::emit_json;
use crate::{ProviderKind, RankArgs};

#[derive(Debug, Serialize)]
pub struct RankReport {
    pub prompt: String,
    pub rendered: String,
    pub selection: Selection,
    pub candidates: usize,
    pub failures: Vec<FailureView>,
}

#[derive(Debug, Serialize)]
pub struct FailureView {
    pub template_id: u32,
    pub seed: i64,
    pub reason: String,
}

pub fn run(args: &RankArgs) -> Result<()> {
    let checkpoint = load_checkpoint(&args.ckpt).with_context(|| format!("reading {}", args.ckpt.display()))?;
    let store =
        EmbeddingStore::load(&args.embeddings).with_context(|| format!("reading {}", args.embeddings.display()))?;
    let templates = match &args.templates {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            TemplateSet::parse(&text)?
        }
        None => TemplateSet::bundled(),
    };
    let seeds: Vec<i64> = (0..i64::from(args.seeds)).collect();
    let prompt_id = args.prompt_id.clone().unwrap_or_else(|| args.prompt.clone());
    let prompt_vec = store.prompt(&prompt_id)?;

    let http;
    let offline;
    let provider: &dyn CandidateProvider = match args.provider {
        ProviderKind::Embeddings => {
            offline = EmbeddingProvider::new(&store);
            &offline
        }
        ProviderKind::Http => {
            let Some(url) = &args.url else {
                bail!("--provider http needs --url");
            };
            http = HttpCandidateProvider::new(url.clone());
            &http
        }
    };

    let set = expand_candidates(&prompt_id, &args.prompt, &templates, &seeds, provider)?;
    for failure in &set.failures {
        warn!(template_id = failure.request.template_id, seed = failure.request.seed, reason = %failure.reason, "candidate skipped");
    }
    let selection = select_best(&checkpoint.model, prompt_vec, &set)?;
    let rendered = set
        .candidates
        .iter()
        .find(|c| c.item_id == selection.item_id)
        .map(|c| c.request.rendered.clone())
        .unwrap_or_default();
    info!(item = %selection.item_id, score = selection.score, candidates = set.len(), "selected");

    let report = RankReport {
        prompt: args.prompt.clone(),
        rendered,
        selection,
        candidates: set.len(),
        failures: set
            .failures
            .iter()
            .map(|f| FailureView {
                template_id: f.request.template_id,
                seed: f.request.seed,
                reason: f.reason.clone(),
            })
            .collect(),
    };
    emit_json(args.out.as_deref(), &report)
}
