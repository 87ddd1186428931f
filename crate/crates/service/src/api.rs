use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use prefkit_core::dataset::{write_log, PhraseFilter, PreferenceExample, PreferenceLabel};
use prefkit_core::ranking::ProviderError;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::auth::{hex_digest, prompt_id, TokenRegistry};
use crate::config::ServiceConfig;
use crate::journal::Journal;
use crate::provider::{GeneratedItem, ImageSource};
use crate::rate::{RateDecision, RateGuard};
use crate::session::{
    ItemView, JudgmentReply, Pair, PairView, PendingReplacement, Session, SessionStatus, SessionView,
};

pub struct AppState {
    pub config: ServiceConfig,
    pub tokens: TokenRegistry,
    pub filter: PhraseFilter,
    pub journal: Journal,
    pub images: ImageSource,
    pub rate: RateGuard,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(
        config: ServiceConfig,
        tokens: TokenRegistry,
        filter: PhraseFilter,
        journal: Journal,
        images: ImageSource,
    ) -> Self {
        let rate = RateGuard::new(config.rate_per_min);
        Self {
            config,
            tokens,
            filter,
            journal,
            images,
            rate,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no such session"))
    }

    fn item_view(&self, item: &GeneratedItem) -> ItemView {
        let url = match &self.images {
            ImageSource::Pool(_) => Some(format!("/items/{}", item.item_id)),
            ImageSource::Generator(_) => None,
        };
        ItemView {
            item_id: item.item_id.clone(),
            model_name: item.meta.model_name.clone(),
            url,
        }
    }

    fn pair_view(&self, pair: &Pair) -> PairView {
        PairView {
            a: self.item_view(&pair.a),
            b: self.item_view(&pair.b),
        }
    }

    fn session_view(&self, s: &Session) -> SessionView {
        SessionView {
            session_id: s.session_id.clone(),
            user_id: s.user_id.clone(),
            prompt: s.prompt_text.clone(),
            prompt_id: s.prompt_id.clone(),
            pair: self.pair_view(&s.pair),
            interaction_count: s.interaction_count,
            interaction_limit: self.config.interaction_limit,
            status: s.status,
        }
    }

    /// Empty or filtered prompts are rejected without echoing the match.
    fn check_prompt(&self, prompt: &str) -> Result<String, ApiError> {
        let prompt = prompt.trim();
        if prompt.is_empty() {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "empty_prompt",
                "prompt must not be empty",
            ));
        }
        if self.filter.matches(prompt) {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "prompt_rejected",
                "prompt was rejected by the content filter",
            ));
        }
        Ok(prompt.to_string())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: &str) -> Self {
        Self {
            status,
            body: json!({ "error": code, "message": message }),
        }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }

    fn provider(err: ProviderError) -> Self {
        tracing::warn!(error = %err, "image provider failed");
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "provider_failure",
            "image provider failed; retry later",
        )
    }

    fn internal(err: impl std::fmt::Display) -> Self {
        tracing::error!(error = %err, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/judgments", post(record_judgment))
        .route("/sessions/{id}/prompt", put(update_prompt))
        .route("/export", get(export_log))
        .route("/admin/flags", get(admin_flags))
        .route("/admin/ban", post(admin_ban))
        .route("/items/{id}", get(get_item))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub token: String,
    pub prompt: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<Json<SessionView>, ApiError> {
    let user_id = state
        .tokens
        .user_for(&req.token)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown_token", "unknown token"))?
        .to_string();
    if state.tokens.is_banned(&user_id) {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "banned", "user is banned"));
    }
    let prompt = state.check_prompt(&req.prompt)?;
    let (a, b) = state.images.pair(&prompt).await.map_err(ApiError::provider)?;
    let session = Session {
        session_id: uuid::Uuid::new_v4().simple().to_string(),
        user_id,
        prompt_id: prompt_id(&prompt),
        prompt_text: prompt,
        pair: Pair { a, b },
        interaction_count: 0,
        status: SessionStatus::Active,
        pending: None,
        replies: HashMap::new(),
    };
    let view = state.session_view(&session);
    tracing::info!(session = %session.session_id, user = %session.user_id, "session created");
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(view))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    refresh_ban(&state, &mut s);
    Ok(Json(state.session_view(&s)))
}

fn refresh_ban(state: &AppState, s: &mut Session) {
    if state.tokens.is_banned(&s.user_id) {
        s.status = SessionStatus::Banned;
    }
}

fn require_active(s: &Session) -> Result<(), ApiError> {
    match s.status {
        SessionStatus::Active => Ok(()),
        other => Err(ApiError::new(
            StatusCode::CONFLICT,
            "session_closed",
            "session no longer accepts judgments",
        )
        .with("status", json!(other))),
    }
}

/// Generates replacements for the slots `choice` rejects. The pair only
/// changes once every new item exists.
async fn replace_rejected(state: &AppState, s: &mut Session, choice: PreferenceLabel) -> Result<(), ProviderError> {
    let (new_a, new_b) = s.replacement_plan(choice);
    let old_a = s.pair.a.item_id.clone();
    let old_b = s.pair.b.item_id.clone();
    let a = if new_a {
        state.images.generate(&s.prompt_text, &[&old_a, &old_b]).await?
    } else {
        s.pair.a.clone()
    };
    let b = if new_b {
        state
            .images
            .generate(&s.prompt_text, &[&old_a, &old_b, &a.item_id])
            .await?
    } else {
        s.pair.b.clone()
    };
    s.pair = Pair { a, b };
    Ok(())
}

#[derive(Debug, Deserialize)]
pub struct JudgmentRequest {
    pub choice: PreferenceLabel,
    #[serde(default)]
    pub request_id: Option<String>,
}

async fn record_judgment(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<JudgmentRequest>,
) -> Result<Json<JudgmentReply>, ApiError> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    let request_id = req
        .request_id
        .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if let Some(reply) = s.replies.get(&request_id) {
        return Ok(Json(reply.clone()));
    }

    // A retry of a persisted judgment whose replacement failed.
    if let Some(pending) = s.pending.clone() {
        replace_rejected(&state, &mut s, pending.choice)
            .await
            .map_err(|e| ApiError::provider(e).with("pending_example_id", json!(pending.example_id)))?;
        s.pending = None;
        let reply = reply_for(&state, &s, &pending.example_id, pending.choice);
        s.replies.insert(pending.request_id.clone(), reply.clone());
        if pending.request_id == request_id {
            return Ok(Json(reply));
        }
    }

    refresh_ban(&state, &mut s);
    require_active(&s)?;

    let example_id = format!("e-{}", hex_digest(&format!("{}/{}", s.session_id, request_id), 24));
    let now = Utc::now();
    let record = PreferenceExample {
        example_id: example_id.clone(),
        prompt_id: s.prompt_id.clone(),
        prompt_text: s.prompt_text.clone(),
        item_a: s.pair.a.item_id.clone(),
        item_b: s.pair.b.item_id.clone(),
        label: req.choice,
        user_id: s.user_id.clone(),
        meta_a: s.pair.a.meta.clone(),
        meta_b: s.pair.b.meta.clone(),
        created_at: now,
    };
    state.journal.append(&record).map_err(ApiError::internal)?;
    s.interaction_count += 1;
    if state.rate.record(&s.user_id, now) == RateDecision::Flag {
        tracing::warn!(user = %s.user_id, "judgment rate above limit");
    }

    if s.interaction_count >= state.config.interaction_limit {
        s.status = SessionStatus::Limited;
        let reply = reply_for(&state, &s, &example_id, req.choice);
        s.replies.insert(request_id, reply.clone());
        return Ok(Json(reply));
    }

    if let Err(err) = replace_rejected(&state, &mut s, req.choice).await {
        s.pending = Some(PendingReplacement {
            request_id,
            example_id: example_id.clone(),
            choice: req.choice,
        });
        return Err(ApiError::provider(err)
            .with("persisted", json!(true))
            .with("example_id", json!(example_id)));
    }
    let reply = reply_for(&state, &s, &example_id, req.choice);
    s.replies.insert(request_id, reply.clone());
    Ok(Json(reply))
}

fn reply_for(state: &AppState, s: &Session, example_id: &str, label: PreferenceLabel) -> JudgmentReply {
    let limited = s.status == SessionStatus::Limited;
    JudgmentReply {
        example_id: example_id.to_string(),
        label,
        pair: (!limited).then(|| state.pair_view(&s.pair)),
        interaction_count: s.interaction_count,
        status: s.status,
        limit_reached: limited,
    }
}

#[derive(Debug, Deserialize)]
pub struct UpdatePrompt {
    pub prompt: String,
}

async fn update_prompt(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<UpdatePrompt>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id)?;
    let mut s = session.lock().await;
    refresh_ban(&state, &mut s);
    if s.status == SessionStatus::Banned {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "banned", "user is banned"));
    }
    require_active(&s)?;
    let prompt = state.check_prompt(&req.prompt)?;
    let (a, b) = state.images.pair(&prompt).await.map_err(ApiError::provider)?;
    s.prompt_id = prompt_id(&prompt);
    s.prompt_text = prompt;
    s.pair = Pair { a, b };
    s.pending = None;
    Ok(Json(state.session_view(&s)))
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub since: Option<String>,
}

async fn export_log(State(state): State<Arc<AppState>>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let since = match q.since.as_deref() {
        None | Some("") => None,
        Some(s) => Some(
            DateTime::parse_from_rfc3339(s)
                .map_err(|_| {
                    ApiError::new(
                        StatusCode::BAD_REQUEST,
                        "bad_since",
                        "since must be an RFC 3339 timestamp",
                    )
                })?
                .with_timezone(&Utc),
        ),
    };
    let records = state.journal.snapshot(since);
    let mut body = Vec::new();
    write_log(&mut body, &records).map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

fn check_admin(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    match &state.config.admin_token {
        None => Ok(()),
        Some(expected) if headers.get("x-admin-token").and_then(|v| v.to_str().ok()) == Some(expected.as_str()) => {
            Ok(())
        }
        Some(_) => Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "admin_only",
            "admin token required",
        )),
    }
}

async fn admin_flags(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Result<Response, ApiError> {
    check_admin(&state, &headers)?;
    Ok(Json(state.rate.flagged()).into_response())
}

#[derive(Debug, Deserialize)]
pub struct BanRequest {
    pub user_id: String,
}

async fn admin_ban(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Json(req): Json<BanRequest>,
) -> Result<StatusCode, ApiError> {
    check_admin(&state, &headers)?;
    state.tokens.ban(&req.user_id);
    tracing::info!(user = %req.user_id, "user banned");
    Ok(StatusCode::NO_CONTENT)
}

async fn get_item(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "unknown_item", "no such item");
    let ImageSource::Pool(pool) = &state.images else {
        return Err(not_found());
    };
    let path = pool.path_of(&id).ok_or_else(not_found)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    let mime = match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], Body::from(bytes)).into_response())
}
