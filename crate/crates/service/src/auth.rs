use std::collections::{HashMap, HashSet};
use std::io;
use std::path::Path;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

pub(crate) fn hex_digest(input: &str, chars: usize) -> String {
    let digest = Sha256::digest(input.as_bytes());
    digest
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>()
        .chars()
        .take(chars)
        .collect()
}

/// Stable anonymized user id for a login token.
pub fn anonymize(token: &str) -> String {
    format!("u-{}", hex_digest(token, 16))
}

/// Prompt id derived from the prompt text.
pub fn prompt_id(prompt_text: &str) -> String {
    format!("p-{}", hex_digest(prompt_text, 16))
}

/// Stub login: known tokens map to anonymized user ids; banned users are refused.
#[derive(Debug, Default)]
pub struct TokenRegistry {
    users: HashMap<String, String>,
    banned: RwLock<HashSet<String>>,
}

impl TokenRegistry {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            users: tokens
                .into_iter()
                .map(|t| (t.as_ref().to_string(), anonymize(t.as_ref())))
                .collect(),
            banned: RwLock::new(HashSet::new()),
        }
    }

    /// Tokens from a file, one per line; blank lines and `#` comments are skipped.
    pub fn read_tokens(path: impl AsRef<Path>) -> io::Result<Vec<String>> {
        Ok(std::fs::read_to_string(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect())
    }

    pub fn user_for(&self, token: &str) -> Option<&str> {
        self.users.get(token).map(String::as_str)
    }

    pub fn ban(&self, user_id: &str) {
        self.banned.write().expect("ban list lock").insert(user_id.to_string());
    }

    pub fn is_banned(&self, user_id: &str) -> bool {
        self.banned.read().expect("ban list lock").contains(user_id)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}
