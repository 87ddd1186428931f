//! Image providers for the collection flow, and the HTTP generator contract
//! shared with offline ranking.
//!
//! Generator contract: `POST {base}/generate` with `{"prompt": str, "seed": int}`
//! answers `{"item_id": str, "embedding": [f64], "model_name"?: str,
//! "guidance_scale"?: f64}`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use prefkit_core::dataset::GenerationMeta;
use prefkit_core::ranking::{CandidateProvider, CandidateRequest, ProviderError, ResolvedCandidate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auth::hex_digest;

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "webp", "gif"];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedItem {
    pub item_id: String,
    pub meta: GenerationMeta,
}

#[derive(Debug, Serialize)]
pub struct GenerateRequest<'a> {
    pub prompt: &'a str,
    pub seed: i64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GenerateResponse {
    pub item_id: String,
    #[serde(default)]
    pub embedding: Vec<f64>,
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default)]
    pub guidance_scale: Option<f64>,
}

fn prompt_seed(prompt: &str) -> u64 {
    u64::from_str_radix(&hex_digest(prompt, 16), 16).expect("hex digest")
}

/// Serves image files from a directory. Each prompt walks its own seeded
/// permutation of the pool, so items repeat for a prompt only after the
/// whole pool has been shown.
#[derive(Debug)]
pub struct PoolProvider {
    dir: PathBuf,
    items: Vec<String>,
    cursors: Mutex<HashMap<String, (u64, Vec<usize>, usize)>>,
}

impl PoolProvider {
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let mut items: Vec<String> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|name| {
                Path::new(name)
                    .extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| IMAGE_EXTENSIONS.contains(&x.to_ascii_lowercase().as_str()))
            })
            .collect();
        items.sort();
        Ok(Self {
            dir,
            items,
            cursors: Mutex::new(HashMap::new()),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Path of a pool item, if `item_id` names one.
    pub fn path_of(&self, item_id: &str) -> Option<PathBuf> {
        self.items
            .binary_search_by(|i| i.as_str().cmp(item_id))
            .ok()
            .map(|_| self.dir.join(item_id))
    }

    fn permutation(&self, prompt: &str, epoch: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(prompt_seed(prompt));
        rng.set_stream(epoch);
        let mut order: Vec<usize> = (0..self.items.len()).collect();
        order.shuffle(&mut rng);
        order
    }

    /// Next item for `prompt` that is not in `exclude`.
    pub fn next_item(&self, prompt: &str, exclude: &[&str]) -> Result<GeneratedItem, ProviderError> {
        if self.items.len() <= exclude.len() {
            return Err(ProviderError::NotFound(format!(
                "image pool has {} items, need more than {}",
                self.items.len(),
                exclude.len()
            )));
        }
        let mut cursors = self.cursors.lock().expect("pool cursor lock");
        let (epoch, order, pos) = cursors
            .entry(prompt.to_string())
            .or_insert_with(|| (0, self.permutation(prompt, 0), 0));
        loop {
            if *pos == order.len() {
                *epoch += 1;
                *order = self.permutation(prompt, *epoch);
                *pos = 0;
            }
            let index = order[*pos];
            *pos += 1;
            let item_id = &self.items[index];
            if !exclude.contains(&item_id.as_str()) {
                return Ok(GeneratedItem {
                    item_id: item_id.clone(),
                    meta: GenerationMeta {
                        model_name: "pool".into(),
                        guidance_scale: 0.0,
                        seed: index as i64,
                        template_id: None,
                    },
                });
            }
        }
    }
}

/// Async client for an external generator.
#[derive(Debug, Clone)]
pub struct GeneratorClient {
    base: String,
    client: reqwest::Client,
    next_seed: std::sync::Arc<Mutex<HashMap<String, i64>>>,
}

impl GeneratorClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("reqwest client"),
            next_seed: Default::default(),
        }
    }

    /// Seeds run 0, 1, 2, ... per prompt so repeated prompts get fresh images.
    fn seed_for(&self, prompt: &str) -> i64 {
        let mut seeds = self.next_seed.lock().expect("seed lock");
        let s = seeds.entry(prompt.to_string()).or_insert(0);
        let out = *s;
        *s += 1;
        out
    }

    pub async fn generate(&self, prompt: &str, exclude: &[&str]) -> Result<GeneratedItem, ProviderError> {
        // A generator may repeat an id; retry a few seeds before giving up.
        for _ in 0..8 {
            let seed = self.seed_for(prompt);
            let response = self
                .client
                .post(format!("{}/generate", self.base))
                .json(&GenerateRequest { prompt, seed })
                .send()
                .await
                .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
            let body = decode(response.status(), response.json::<GenerateResponse>().await)?;
            if !exclude.contains(&body.item_id.as_str()) {
                return Ok(GeneratedItem {
                    meta: meta_from(&body, seed),
                    item_id: body.item_id,
                });
            }
        }
        Err(ProviderError::Invalid(
            "generator kept returning the retained item".into(),
        ))
    }
}

fn decode(
    status: reqwest::StatusCode,
    body: Result<GenerateResponse, reqwest::Error>,
) -> Result<GenerateResponse, ProviderError> {
    if status == reqwest::StatusCode::NOT_FOUND {
        return Err(ProviderError::NotFound(format!("generator answered {status}")));
    }
    if !status.is_success() {
        return Err(ProviderError::Unreachable(format!("generator answered {status}")));
    }
    let body = body.map_err(|e| ProviderError::Invalid(e.to_string()))?;
    if body.item_id.is_empty() {
        return Err(ProviderError::Invalid("empty item_id".into()));
    }
    Ok(body)
}

fn meta_from(body: &GenerateResponse, seed: i64) -> GenerationMeta {
    GenerationMeta {
        model_name: body.model_name.clone().unwrap_or_else(|| "generator".into()),
        guidance_scale: body.guidance_scale.unwrap_or(0.0),
        seed,
        template_id: None,
    }
}

/// Blocking client for ranking: one generator call per candidate request.
#[derive(Debug, Clone)]
pub struct HttpCandidateProvider {
    base: String,
    client: reqwest::blocking::Client,
}

impl HttpCandidateProvider {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("reqwest blocking client"),
        }
    }
}

impl CandidateProvider for HttpCandidateProvider {
    fn generate(&self, request: &CandidateRequest) -> Result<ResolvedCandidate, ProviderError> {
        let response = self
            .client
            .post(format!("{}/generate", self.base))
            .json(&GenerateRequest {
                prompt: &request.rendered,
                seed: request.seed,
            })
            .send()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        let body = decode(response.status(), response.json::<GenerateResponse>())?;
        if body.embedding.is_empty() || body.embedding.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::Invalid(format!(
                "{}: missing or non-finite embedding",
                body.item_id
            )));
        }
        Ok(ResolvedCandidate {
            item_id: body.item_id,
            embedding: body.embedding,
        })
    }
}

/// The provider a running service draws images from.
#[derive(Debug)]
pub enum ImageSource {
    Pool(PoolProvider),
    Generator(GeneratorClient),
}

impl ImageSource {
    pub async fn generate(&self, prompt: &str, exclude: &[&str]) -> Result<GeneratedItem, ProviderError> {
        match self {
            Self::Pool(pool) => pool.next_item(prompt, exclude),
            Self::Generator(client) => client.generate(prompt, exclude).await,
        }
    }

    /// A fresh pair of distinct items.
    pub async fn pair(&self, prompt: &str) -> Result<(GeneratedItem, GeneratedItem), ProviderError> {
        let a = self.generate(prompt, &[]).await?;
        let b = self.generate(prompt, &[&a.item_id]).await?;
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> (tempfile::TempDir, PoolProvider) {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..n {
            std::fs::write(dir.path().join(format!("img{i:03}.png")), b"png").unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), b"skip").unwrap();
        let p = PoolProvider::open(dir.path()).unwrap();
        (dir, p)
    }

    #[test]
    fn pool_lists_only_images() {
        let (_dir, p) = pool(4);
        assert_eq!(p.len(), 4);
        assert!(p.path_of("img000.png").is_some());
        assert!(p.path_of("notes.txt").is_none());
    }

    #[test]
    fn pool_draws_without_replacement_per_prompt() {
        let (_dir, p) = pool(6);
        let seen: Vec<String> = (0..6).map(|_| p.next_item("a cat", &[]).unwrap().item_id).collect();
        let mut unique = seen.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 6);
        // The order is a function of the prompt.
        let (_dir2, q) = pool(6);
        let again: Vec<String> = (0..6).map(|_| q.next_item("a cat", &[]).unwrap().item_id).collect();
        assert_eq!(seen, again);
    }

    #[test]
    fn pool_respects_exclusions() {
        let (_dir, p) = pool(2);
        for _ in 0..5 {
            let item = p.next_item("x", &["img000.png"]).unwrap();
            assert_eq!(item.item_id, "img001.png");
        }
        assert!(matches!(
            p.next_item("x", &["img000.png", "img001.png"]),
            Err(ProviderError::NotFound(_))
        ));
    }
}
