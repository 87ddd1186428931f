#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use prefkit_service::{build_state, spawn_server, ProviderConfig, ServiceConfig};
use reqwest::Client;
use serde_json::{json, Value};
use tempfile::TempDir;

pub struct TestServer {
    pub base: String,
    pub log_path: PathBuf,
    pub client: Client,
    _dir: TempDir,
}

pub struct Options {
    pub limit: u32,
    pub rate_per_min: u32,
    pub pool_size: usize,
    pub generator: Option<String>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            limit: 10,
            rate_per_min: 1000,
            pool_size: 40,
            generator: None,
        }
    }
}

pub async fn start(opts: Options) -> TestServer {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    std::fs::create_dir(&pool).unwrap();
    for i in 0..opts.pool_size {
        std::fs::write(pool.join(format!("img{i:03}.png")), format!("image {i}")).unwrap();
    }
    let nsfw = dir.path().join("nsfw.txt");
    std::fs::write(&nsfw, "# blocked phrases\nforbidden phrase\ngore\n").unwrap();
    let log_path = dir.path().join("judgments.jsonl");
    let provider = match opts.generator {
        Some(url) => ProviderConfig::Generator(url),
        None => ProviderConfig::Pool(pool),
    };
    let mut config = ServiceConfig::new(provider, &log_path);
    config.interaction_limit = opts.limit;
    config.rate_per_min = opts.rate_per_min;
    config.nsfw_file = Some(nsfw);
    config.tokens = vec!["alice-token".into(), "bob-token".into()];
    let state = Arc::new(build_state(config).unwrap());
    let (addr, _handle) = spawn_server(state, SocketAddr::from(([127, 0, 0, 1], 0)))
        .await
        .unwrap();
    TestServer {
        base: format!("http://{addr}"),
        log_path,
        client: Client::new(),
        _dir: dir,
    }
}

impl TestServer {
    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self
            .client
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn put(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self
            .client
            .put(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get_text(&self, path: &str) -> (StatusCode, String) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status();
        (status, r.text().await.unwrap())
    }

    pub async fn session(&self, token: &str, prompt: &str) -> Value {
        let (status, body) = self
            .post("/sessions", json!({ "token": token, "prompt": prompt }))
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }

    pub async fn judge(&self, session_id: &str, choice: &str, request_id: &str) -> (StatusCode, Value) {
        self.post(
            &format!("/sessions/{session_id}/judgments"),
            json!({ "choice": choice, "request_id": request_id }),
        )
        .await
    }
}

/// A fake image generator whose failures can be switched on and off.
#[derive(Clone, Default)]
pub struct MockGenerator {
    pub failing: Arc<AtomicBool>,
    pub calls: Arc<AtomicU64>,
}

async fn generate(State(mock): State<MockGenerator>, Json(req): Json<Value>) -> Result<Json<Value>, StatusCode> {
    mock.calls.fetch_add(1, Ordering::SeqCst);
    if mock.failing.load(Ordering::SeqCst) {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let prompt = req["prompt"].as_str().unwrap_or_default();
    let seed = req["seed"].as_i64().unwrap_or_default();
    let embedding: Vec<f64> = (0..4)
        .map(|i| ((seed + i) as f64).sin() + prompt.len() as f64 * 0.01)
        .collect();
    Ok(Json(json!({
        "item_id": format!("gen-{}-{seed}", prompt.len()),
        "embedding": embedding,
        "model_name": "mock-diffusion",
        "guidance_scale": 7.5
    })))
}

pub async fn start_generator() -> (String, MockGenerator) {
    let mock = MockGenerator::default();
    let app = Router::new()
        .route("/generate", post(generate))
        .with_state(mock.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), mock)
}

pub fn item(pair: &Value, slot: &str) -> String {
    pair[slot]["item_id"].as_str().unwrap().to_string()
}
