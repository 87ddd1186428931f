use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::PreferenceExample;

/// Case-insensitive phrase matcher. A phrase matches when it occurs in the
/// text with a non-word character (or the text boundary) on both sides.
#[derive(Debug, Clone, Default)]
pub struct PhraseFilter {
    phrases: Vec<Vec<char>>,
}

impl PhraseFilter {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phrases = phrases
            .into_iter()
            .map(|p| p.as_ref().trim().to_lowercase())
            .filter(|p| !p.is_empty())
            .map(|p| p.chars().collect())
            .collect();
        Self { phrases }
    }

    /// Parses a word-list file: one phrase per line, `#` starts a comment line.
    pub fn from_list(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn matches(&self, text: &str) -> bool {
        if self.phrases.is_empty() {
            return false;
        }
        let lowered: Vec<char> = text.to_lowercase().chars().collect();
        self.phrases.iter().any(|phrase| contains_bounded(&lowered, phrase))
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn contains_bounded(haystack: &[char], needle: &[char]) -> bool {
    if needle.len() > haystack.len() {
        return false;
    }
    (0..=haystack.len() - needle.len()).any(|start| {
        let end = start + needle.len();
        if haystack[start..end] != *needle {
            return false;
        }
        // A boundary only matters on sides where the phrase itself starts or ends with a word char.
        let left_ok = start == 0 || !is_word_char(needle[0]) || !is_word_char(haystack[start - 1]);
        let right_ok = end == haystack.len() || !is_word_char(needle[needle.len() - 1]) || !is_word_char(haystack[end]);
        left_ok && right_ok
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Nsfw,
    BannedUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub example: PreferenceExample,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<PreferenceExample>,
    pub dropped: Vec<DroppedRecord>,
}

/// Partitions examples into kept and dropped. A banned user takes precedence
/// over an NSFW prompt when both apply.
pub fn filter_records(
    examples: Vec<PreferenceExample>,
    nsfw: &PhraseFilter,
    banned_users: &HashSet<String>,
) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for example in examples {
        let reason = if banned_users.contains(&example.user_id) {
            Some(DropReason::BannedUser)
        } else if nsfw.matches(&example.prompt_text) {
            Some(DropReason::Nsfw)
        } else {
            None
        };
        match reason {
            Some(reason) => outcome.dropped.push(DroppedRecord { example, reason }),
            None => outcome.kept.push(example),
        }
    }
    outcome
}
