//! Flags users who judge faster than a configured per-minute rate.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDecision {
    Allow,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedUser {
    pub user_id: String,
    /// Most judgments seen inside one 60 s window.
    pub peak_per_minute: usize,
    pub first_flagged_at: DateTime<Utc>,
    pub last_flagged_at: DateTime<Utc>,
}

#[derive(Debug)]
pub struct RateGuard {
    max_per_minute: usize,
    window: Duration,
    recent: Mutex<HashMap<String, VecDeque<DateTime<Utc>>>>,
    flagged: Mutex<BTreeMap<String, FlaggedUser>>,
}

impl RateGuard {
    pub fn new(max_per_minute: u32) -> Self {
        Self {
            max_per_minute: max_per_minute as usize,
            window: Duration::seconds(60),
            recent: Mutex::new(HashMap::new()),
            flagged: Mutex::new(BTreeMap::new()),
        }
    }

    /// Records one judgment. Flags when more than the allowed number of
    /// judgments fall within the 60 s ending at `at`. Flagging never blocks.
    pub fn record(&self, user_id: &str, at: DateTime<Utc>) -> RateDecision {
        let count = {
            let mut recent = self.recent.lock().expect("rate lock");
            let times = recent.entry(user_id.to_string()).or_default();
            times.push_back(at);
            while times.front().is_some_and(|&t| at - t >= self.window) {
                times.pop_front();
            }
            times.len()
        };
        if count <= self.max_per_minute {
            return RateDecision::Allow;
        }
        let mut flagged = self.flagged.lock().expect("flag lock");
        let entry = flagged.entry(user_id.to_string()).or_insert_with(|| FlaggedUser {
            user_id: user_id.to_string(),
            peak_per_minute: count,
            first_flagged_at: at,
            last_flagged_at: at,
        });
        entry.peak_per_minute = entry.peak_per_minute.max(count);
        entry.last_flagged_at = at;
        RateDecision::Flag
    }

    pub fn flagged(&self) -> Vec<FlaggedUser> {
        self.flagged.lock().expect("flag lock").values().cloned().collect()
    }
}
