use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingStore;

use super::{RankingError, TemplateSet};

/// One generation request: a rendered prompt and a seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRequest {
    pub prompt_id: String,
    pub prompt_text: String,
    pub rendered: String,
    pub template_id: u32,
    pub seed: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedCandidate {
    pub item_id: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("no candidate available: {0}")]
    NotFound(String),
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("invalid candidate: {0}")]
    Invalid(String),
}

/// Source of candidate items and their image embeddings.
pub trait CandidateProvider: Sync {
    fn generate(&self, request: &CandidateRequest) -> Result<ResolvedCandidate, ProviderError>;
}

/// Item id used for pre-computed candidates.
pub fn candidate_item_id(prompt_id: &str, template_id: u32, seed: i64) -> String {
    format!("{prompt_id}/t{template_id}/s{seed}")
}

/// Looks candidates up in an embedding store under [`candidate_item_id`].
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingProvider<'a> {
    store: &'a EmbeddingStore,
}

impl<'a> EmbeddingProvider<'a> {
    pub fn new(store: &'a EmbeddingStore) -> Self {
        Self { store }
    }
}

impl CandidateProvider for EmbeddingProvider<'_> {
    fn generate(&self, request: &CandidateRequest) -> Result<ResolvedCandidate, ProviderError> {
        let item_id = candidate_item_id(&request.prompt_id, request.template_id, request.seed);
        let embedding = self
            .store
            .item(&item_id)
            .map_err(|_| ProviderError::NotFound(item_id.clone()))?
            .to_vec();
        Ok(ResolvedCandidate { item_id, embedding })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub request: CandidateRequest,
    pub item_id: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFailure {
    pub request: CandidateRequest,
    pub reason: String,
}

/// Candidates for one prompt, plus the requests that could not be resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub prompt_id: String,
    pub prompt_text: String,
    pub candidates: Vec<Candidate>,
    pub failures: Vec<CandidateFailure>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Requests one candidate per (template, seed), templates outermost.
///
/// Missing or malformed candidates are recorded and skipped; an unreachable
/// provider aborts the expansion.
pub fn expand_candidates(
    prompt_id: &str,
    prompt_text: &str,
    templates: &TemplateSet,
    seeds: &[i64],
    provider: &dyn CandidateProvider,
) -> Result<CandidateSet, RankingError> {
    let mut set = CandidateSet {
        prompt_id: prompt_id.to_string(),
        prompt_text: prompt_text.to_string(),
        candidates: Vec::with_capacity(templates.len() * seeds.len()),
        failures: Vec::new(),
    };
    for template in templates.iter() {
        for &seed in seeds {
            let request = CandidateRequest {
                prompt_id: prompt_id.to_string(),
                prompt_text: prompt_text.to_string(),
                rendered: template.render(prompt_text),
                template_id: template.template_id,
                seed,
            };
            match provider.generate(&request) {
                Ok(resolved) => set.candidates.push(Candidate {
                    request,
                    item_id: resolved.item_id,
                    embedding: resolved.embedding,
                }),
                Err(ProviderError::Unreachable(msg)) => return Err(RankingError::ProviderUnreachable(msg)),
                Err(err) => set.failures.push(CandidateFailure {
                    request,
                    reason: err.to_string(),
                }),
            }
        }
    }
    Ok(set)
}
