//! HTTP front end for a [`TriageSession`].

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use vulnlabel_core::service::TriageSession;
use vulnlabel_core::{Error, LabelId};

pub type SharedSession = Arc<RwLock<TriageSession>>;

#[derive(Debug, Deserialize)]
pub struct ConfirmBody {
    pub labels: Vec<String>,
    #[serde(default)]
    pub create_new: bool,
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    pub q: String,
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SearchResult {
    query: String,
    labels: Vec<LabelId>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

struct ApiError(Error);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            Error::UnknownReport(_) => (StatusCode::NOT_FOUND, "unknown_report"),
            Error::AlreadyConfirmed(_) => (StatusCode::CONFLICT, "already_confirmed"),
            Error::OutOfOrder(_) => (StatusCode::CONFLICT, "out_of_order"),
            Error::UnknownLabel(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_label"),
            Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_label"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let body = ErrorBody {
            error: kind,
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

const DEFAULT_SEARCH_LIMIT: usize = 20;

async fn next(State(s): State<SharedSession>) -> Result<Response, ApiError> {
    match s.read().await.next().map_err(ApiError)? {
        Some(sug) => Ok(Json(sug).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn confirm(
    State(s): State<SharedSession>,
    Path(id): Path<String>,
    Json(body): Json<ConfirmBody>,
) -> Result<Response, ApiError> {
    let ack = s
        .write()
        .await
        .confirm(&id, &body.labels, body.create_new)
        .map_err(ApiError)?;
    Ok(Json(ack).into_response())
}

async fn stats(State(s): State<SharedSession>) -> Response {
    Json(s.read().await.stats()).into_response()
}

async fn search(State(s): State<SharedSession>, Query(p): Query<SearchParams>) -> Response {
    let labels = s
        .read()
        .await
        .search(&p.q, p.limit.unwrap_or(DEFAULT_SEARCH_LIMIT));
    Json(SearchResult { query: p.q, labels }).into_response()
}

pub fn router(session: SharedSession) -> Router {
    Router::new()
        .route("/session/next", get(next))
        .route("/reports/{id}/labels", post(confirm))
        .route("/stats", get(stats))
        .route("/labels/search", get(search))
        .with_state(session)
}

pub async fn serve(session: TriageSession, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let app = router(Arc::new(RwLock::new(session)));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
