//! Preference collection service: users write a prompt, judge pairs of
//! generated images, and every judgment is appended to a JSONL log in the
//! dataset ingest format.

pub mod api;
pub mod auth;
pub mod config;
pub mod journal;
pub mod provider;
pub mod rate;
pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use prefkit_core::dataset::{IngestError, PhraseFilter};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use api::{router, AppState};
pub use config::{ConfigError, ProviderConfig, ServiceConfig};
pub use provider::{GeneratorClient, HttpCandidateProvider, ImageSource, PoolProvider};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("cannot read {what} at {path}: {source}")]
    Read {
        what: &'static str,
        path: String,
        source: std::io::Error,
    },
    #[error("cannot open judgment log: {0}")]
    Journal(#[from] IngestError),
    #[error("image pool {0} has fewer than 4 images")]
    SmallPool(String),
    #[error("no login tokens configured")]
    NoTokens,
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
}

fn read_err(what: &'static str, path: &std::path::Path) -> impl FnOnce(std::io::Error) -> StartupError {
    let path = path.display().to_string();
    move |source| StartupError::Read { what, path, source }
}

/// Builds service state from configuration: tokens, phrase filter, log and provider.
pub fn build_state(config: ServiceConfig) -> Result<AppState, StartupError> {
    let mut tokens = config.tokens.clone();
    if let Some(path) = &config.tokens_file {
        tokens.extend(auth::TokenRegistry::read_tokens(path).map_err(read_err("token file", path))?);
    }
    if tokens.is_empty() {
        return Err(StartupError::NoTokens);
    }
    let filter = match &config.nsfw_file {
        Some(path) => PhraseFilter::from_list(&std::fs::read_to_string(path).map_err(read_err("phrase list", path))?),
        None => PhraseFilter::new(Vec::<String>::new()),
    };
    let journal = journal::Journal::open(&config.log_path)?;
    let images = match &config.provider {
        ProviderConfig::Pool(dir) => {
            let pool = PoolProvider::open(dir).map_err(read_err("image pool", dir))?;
            // A tie replaces both images while avoiding the two shown.
            if pool.len() < 4 {
                return Err(StartupError::SmallPool(dir.display().to_string()));
            }
            ImageSource::Pool(pool)
        }
        ProviderConfig::Generator(url) => ImageSource::Generator(GeneratorClient::new(url.clone())),
    };
    Ok(AppState::new(
        config,
        auth::TokenRegistry::new(tokens),
        filter,
        journal,
        images,
    ))
}

/// Binds `addr` and serves in a background task. Returns the bound address.
pub async fn spawn_server(
    state: Arc<AppState>,
    addr: SocketAddr,
) -> Result<(SocketAddr, JoinHandle<std::io::Result<()>>), StartupError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| StartupError::Bind { addr, source })?;
    let local = listener
        .local_addr()
        .map_err(|source| StartupError::Bind { addr, source })?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    Ok((local, handle))
}
