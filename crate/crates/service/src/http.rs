//! JSON-over-HTTP front end. Every route is a thin wrapper around one
//! [`Service`] method; blocking work runs on the blocking pool.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use concord_core::eventlog::events_to_string;
use concord_core::{ItemId, UserId, Vote};

use crate::error::ServiceError;
use crate::model::{EventView, Recommendation, Tally};
use crate::service::{CreatedEvent, NewEvent, Service};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub name: String,
    pub address: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub user_id: UserId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptionRequest {
    pub item_id: ItemId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoteRequest {
    pub option_id: String,
    pub value: Vote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommentRequest {
    pub text: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CloseRequest {
    #[serde(default, rename = "override")]
    pub override_option: Option<String>,
}

#[derive(Debug, Deserialize)]
struct KQuery {
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct SinceQuery {
    since: Option<i64>,
}

/// Error body: `{"error": kind, "message": text}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub fn status_of(err: &ServiceError) -> (StatusCode, &'static str) {
    use ServiceError::*;
    match err {
        InvalidToken => (StatusCode::FORBIDDEN, "invalid_token"),
        NotAdmin => (StatusCode::FORBIDDEN, "not_admin"),
        EventClosed => (StatusCode::CONFLICT, "event_closed"),
        DuplicateOption(_) => (StatusCode::CONFLICT, "duplicate_option"),
        NoOptions => (StatusCode::CONFLICT, "no_options"),
        UnknownOption(_) => (StatusCode::NOT_FOUND, "unknown_option"),
        UnknownItem(_) => (StatusCode::NOT_FOUND, "unknown_item"),
        UnknownUser(_) => (StatusCode::NOT_FOUND, "unknown_user"),
        Invalid(_) | Core(_) => (StatusCode::BAD_REQUEST, "invalid"),
        Journal(_) | Io(_) | Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = status_of(&self);
        let body = ErrorBody { error: kind.to_string(), message: self.to_string() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Journal(format!("worker failed: {e}")))?
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/users", post(register))
        .route("/events", post(create_event))
        .route("/e/{token}", get(view))
        .route("/e/{token}/options", post(add_option))
        .route("/e/{token}/votes", post(vote))
        .route("/e/{token}/comments", post(comment))
        .route("/e/{token}/close", post(close))
        .route("/e/{token}/recommendations", get(recommendations))
        .route("/export", get(export))
        .with_state(service)
}

async fn register(State(s): State<Arc<Service>>, Json(req): Json<RegisterRequest>) -> ApiResult<RegisterResponse> {
    let user_id = blocking(move || s.register_user(&req.name, &req.address)).await?;
    Ok(Json(RegisterResponse { user_id }))
}

async fn create_event(State(s): State<Arc<Service>>, Json(req): Json<NewEvent>) -> ApiResult<CreatedEvent> {
    Ok(Json(blocking(move || s.create_event(req)).await?))
}

async fn view(State(s): State<Arc<Service>>, Path(token): Path<String>) -> ApiResult<EventView> {
    Ok(Json(blocking(move || s.get_event_view(&token)).await?))
}

async fn add_option(
    State(s): State<Arc<Service>>,
    Path(token): Path<String>,
    Json(req): Json<OptionRequest>,
) -> ApiResult<EventView> {
    Ok(Json(blocking(move || s.add_option(&token, req.item_id)).await?))
}

async fn vote(
    State(s): State<Arc<Service>>,
    Path(token): Path<String>,
    Json(req): Json<VoteRequest>,
) -> ApiResult<Tally> {
    Ok(Json(blocking(move || s.cast_vote(&token, &req.option_id, req.value)).await?))
}

async fn comment(
    State(s): State<Arc<Service>>,
    Path(token): Path<String>,
    Json(req): Json<CommentRequest>,
) -> ApiResult<EventView> {
    Ok(Json(blocking(move || s.add_comment(&token, &req.text)).await?))
}

async fn close(
    State(s): State<Arc<Service>>,
    Path(token): Path<String>,
    body: Option<Json<CloseRequest>>,
) -> ApiResult<EventView> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    Ok(Json(blocking(move || s.close_event(&token, req.override_option.as_deref())).await?))
}

async fn recommendations(
    State(s): State<Arc<Service>>,
    Path(token): Path<String>,
    Query(q): Query<KQuery>,
) -> ApiResult<Vec<Recommendation>> {
    Ok(Json(
        blocking(move || {
            let k = q.k.unwrap_or(s.config().recommender.k);
            s.recommendations(&token, k)
        })
        .await?,
    ))
}

async fn export(State(s): State<Arc<Service>>, Query(q): Query<SinceQuery>) -> Result<Response, ServiceError> {
    let text = blocking(move || Ok(events_to_string(&s.export_event_log(q.since)))).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

/// Serves the router on `addr` until the process is stopped.
pub async fn serve(service: Arc<Service>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}
