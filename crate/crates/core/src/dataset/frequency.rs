use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PreferenceExample;

/// Number of training examples per prompt id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyTable(BTreeMap<String, u64>);

impl FrequencyTable {
    pub fn get(&self, prompt_id: &str) -> Option<u64> {
        self.0.get(prompt_id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, u64)> for FrequencyTable {
    fn from_iter<T: IntoIterator<Item = (String, u64)>>(iter: T) -> Self {
        Self(iter.into_iter().filter(|(_, c)| *c > 0).collect())
    }
}

pub fn prompt_frequency(train: &[PreferenceExample]) -> FrequencyTable {
    let mut counts = BTreeMap::new();
    for example in train {
        *counts.entry(example.prompt_id.clone()).or_insert(0) += 1;
    }
    FrequencyTable(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{GenerationMeta, PreferenceLabel};
    use proptest::prelude::*;

    fn with_prompt(prompt_id: &str) -> PreferenceExample {
        let meta = GenerationMeta {
            model_name: "m".into(),
            guidance_scale: 3.0,
            seed: 1,
            template_id: None,
        };
        PreferenceExample {
            example_id: String::new(),
            prompt_id: prompt_id.into(),
            prompt_text: "text".into(),
            item_a: "a".into(),
            item_b: "b".into(),
            label: PreferenceLabel::First,
            user_id: "u".into(),
            meta_a: meta.clone(),
            meta_b: meta,
            created_at: chrono::DateTime::UNIX_EPOCH,
        }
    }

    #[test]
    fn counts_per_prompt() {
        let table = prompt_frequency(&[with_prompt("a"), with_prompt("a"), with_prompt("b")]);
        assert_eq!(table.get("a"), Some(2));
        assert_eq!(table.get("b"), Some(1));
        assert_eq!(table.get("c"), None);
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn empty_train_empty_table() {
        assert!(prompt_frequency(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn counts_sum_to_example_count(ids in proptest::collection::vec(0u16..50, 0..400)) {
            let train: Vec<_> = ids.iter().map(|i| with_prompt(&format!("p{i}"))).collect();
            let table = prompt_frequency(&train);
            prop_assert_eq!(table.total(), train.len() as u64);
            prop_assert!(table.iter().all(|(_, c)| c >= 1));
        }
    }
}
