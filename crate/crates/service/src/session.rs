use std::collections::HashMap;

use prefkit_core::dataset::PreferenceLabel;
use serde::Serialize;

use crate::provider::GeneratedItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Limited,
    Banned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub a: GeneratedItem,
    pub b: GeneratedItem,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemView {
    pub item_id: String,
    pub model_name: String,
    /// Where the image can be fetched from this service, when it serves it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairView {
    pub a: ItemView,
    pub b: ItemView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub user_id: String,
    pub prompt: String,
    pub prompt_id: String,
    pub pair: PairView,
    pub interaction_count: u32,
    pub interaction_limit: u32,
    pub status: SessionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgmentReply {
    pub example_id: String,
    pub label: PreferenceLabel,
    /// The next pair, or `None` once the interaction limit is reached.
    pub pair: Option<PairView>,
    pub interaction_count: u32,
    pub status: SessionStatus,
    pub limit_reached: bool,
}

/// A judgment that was persisted but whose replacement images could not be
/// generated yet.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingReplacement {
    pub request_id: String,
    pub example_id: String,
    pub choice: PreferenceLabel,
}

#[derive(Debug)]
pub struct Session {
    pub session_id: String,
    pub user_id: String,
    pub prompt_text: String,
    pub prompt_id: String,
    pub pair: Pair,
    pub interaction_count: u32,
    pub status: SessionStatus,
    pub pending: Option<PendingReplacement>,
    /// Replies already sent, by request id.
    pub replies: HashMap<String, JudgmentReply>,
}

impl Session {
    /// Which slots `(a, b)` get a new item after `choice`.
    pub fn replacement_plan(&self, choice: PreferenceLabel) -> (bool, bool) {
        match choice {
            PreferenceLabel::First => (false, true),
            PreferenceLabel::Second => (true, false),
            PreferenceLabel::Tie => (true, true),
        }
    }
}
