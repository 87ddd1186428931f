use serde::{Deserialize, Serialize};

use super::RankingError;

pub const PLACEHOLDER: &str = "[prompt]";

const DEFAULT_TEMPLATES: &str = include_str!("../../assets/templates.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: u32,
    pub pattern: String,
}

impl PromptTemplate {
    pub fn new(template_id: u32, pattern: impl Into<String>) -> Result<Self, RankingError> {
        let pattern = pattern.into();
        if pattern.matches(PLACEHOLDER).count() != 1 {
            return Err(RankingError::BadTemplate(pattern));
        }
        Ok(Self { template_id, pattern })
    }

    pub fn render(&self, prompt: &str) -> String {
        self.pattern.replacen(PLACEHOLDER, prompt, 1)
    }

    pub fn is_null(&self) -> bool {
        self.pattern == PLACEHOLDER
    }
}

/// Ordered templates; template 0 is always the null template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<PromptTemplate>,
}

impl TemplateSet {
    /// Builds a set from patterns. The null template is placed first whether
    /// or not it was listed, and listed duplicates of it are dropped.
    pub fn from_patterns<I, S>(patterns: I) -> Result<Self, RankingError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut templates = vec![PromptTemplate::new(0, PLACEHOLDER)?];
        for pattern in patterns {
            let pattern = pattern.as_ref();
            if pattern == PLACEHOLDER {
                continue;
            }
            templates.push(PromptTemplate::new(templates.len() as u32, pattern)?);
        }
        Ok(Self { templates })
    }

    /// One pattern per line; blank lines and `#` comment lines are ignored.
    pub fn parse(text: &str) -> Result<Self, RankingError> {
        Self::from_patterns(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    /// The bundled list: the null template plus 19 quality modifiers.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }

    pub fn only_null() -> Self {
        Self::from_patterns(std::iter::empty::<&str>()).expect("null template is valid")
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.iter()
    }
}
