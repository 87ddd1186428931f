//! Best-of-N ranking: expand a prompt into templated candidates across
//! seeds, score each against the original prompt, keep the argmax.

mod candidates;
mod head_to_head;
mod select;
mod templates;

pub use candidates::{
    candidate_item_id, expand_candidates, Candidate, CandidateFailure, CandidateProvider, CandidateRequest,
    CandidateSet, EmbeddingProvider, ProviderError, ResolvedCandidate,
};
pub use head_to_head::{head_to_head, LabelJudge, PairJudge, ScoreJudge};
pub use select::{select_best, select_best_by, Selection};
pub use templates::{PromptTemplate, TemplateSet, PLACEHOLDER};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("template {0:?} must contain [prompt] exactly once")]
    BadTemplate(String),
    #[error("candidate provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("no candidate has a resolvable embedding")]
    NoCandidates,
    #[error("scoring failed: {0}")]
    Scoring(String),
    #[error("selection maps cover different prompts (e.g. {0})")]
    KeyMismatch(String),
    #[error("judge has no label for prompt {prompt} ({item_a} vs {item_b})")]
    MissingJudgment {
        prompt: String,
        item_a: String,
        item_b: String,
    },
}
