//! HTTP routes of the arena.
//!
//! | route | success | errors |
//! |---|---|---|
//! | `GET /api/pair?rater=<id>` | 200 pair JSON, 204 when the rater is done | 400 |
//! | `POST /api/vote` | 200 stored vote | 400, 404, 409 with the stored vote |
//! | `GET /api/results` | 200 comparison records as JSON lines | 401, 403 |
//! | `GET /preview/<token>/...` | static preview files | 404 |
//!
//! `/api/results` needs `Authorization: Bearer <token>` matching the
//! `ARENA_ADMIN_TOKEN` environment variable; without it the route answers 403.
//! Any other path is served from the UI directory when one is configured.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower::ServiceExt;
use tower_http::services::ServeDir;

use super::{Arena, ArenaError, VoteRequest};

/// Environment variable holding the admin token.
pub const ADMIN_TOKEN_ENV: &str = "ARENA_ADMIN_TOKEN";

#[derive(Clone)]
struct AppState {
    arena: Arc<Arena>,
    admin_token: Option<Arc<str>>,
}

impl IntoResponse for ArenaError {
    fn into_response(self) -> Response {
        let status = match &self {
            ArenaError::UnknownPair(_) => StatusCode::NOT_FOUND,
            ArenaError::Duplicate { previous } => {
                let body = json!({"error": self.to_string(), "previous": previous});
                return (StatusCode::CONFLICT, Json(body)).into_response();
            }
            ArenaError::MissingRater | ArenaError::NotServed { .. } => StatusCode::BAD_REQUEST,
            ArenaError::Manifest(_) | ArenaError::Log { .. } | ArenaError::Io(_) => {
                log::error!("{self}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(json!({"error": self.to_string()}))).into_response()
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    (status, Json(json!({"error": message}))).into_response()
}

#[derive(Deserialize)]
struct PairQuery {
    #[serde(default)]
    rater: String,
}

async fn next_pair(State(app): State<AppState>, Query(q): Query<PairQuery>) -> Response {
    match app.arena.next_pair(&q.rater) {
        Ok(Some(payload)) => Json(payload).into_response(),
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => e.into_response(),
    }
}

async fn vote(State(app): State<AppState>, body: axum::body::Bytes) -> Response {
    let request: VoteRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, &format!("invalid vote: {e}")),
    };
    match app.arena.vote(request) {
        Ok(record) => Json(record).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn results(State(app): State<AppState>, headers: HeaderMap) -> Response {
    let Some(expected) = app.admin_token.as_deref() else {
        return error(
            StatusCode::FORBIDDEN,
            &format!("results are disabled; set {ADMIN_TOKEN_ENV}"),
        );
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given != Some(expected) {
        return error(StatusCode::UNAUTHORIZED, "missing or wrong admin token");
    }
    let body = crate::jsonl::to_string(&app.arena.export_records());
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn preview(app: AppState, token: &str, rest: &str, request: Request) -> Response {
    let Some(dir) = app.arena.preview_dir(token) else {
        return error(StatusCode::NOT_FOUND, "unknown preview");
    };
    let uri: Uri = match format!("/{rest}").parse() {
        Ok(u) => u,
        Err(_) => return error(StatusCode::BAD_REQUEST, "bad preview path"),
    };
    let (mut parts, body) = request.into_parts();
    parts.uri = uri;
    match ServeDir::new(dir).oneshot(Request::from_parts(parts, body)).await {
        Ok(response) => response.map(Body::new),
        Err(never) => match never {},
    }
}

async fn preview_root(State(app): State<AppState>, UrlPath(token): UrlPath<String>, request: Request) -> Response {
    preview(app, &token, "", request).await
}

async fn preview_file(
    State(app): State<AppState>,
    UrlPath((token, rest)): UrlPath<(String, String)>,
    request: Request,
) -> Response {
    preview(app, &token, &rest, request).await
}

/// Builds the arena routes. `admin_token` guards `/api/results`; `ui_dir`
/// is served for every other path.
pub fn router(arena: Arc<Arena>, admin_token: Option<String>, ui_dir: Option<PathBuf>) -> Router {
    let state = AppState {
        arena,
        admin_token: admin_token.filter(|t| !t.is_empty()).map(Arc::from),
    };
    let app = Router::new()
        .route("/api/pair", get(next_pair))
        .route("/api/vote", post(vote))
        .route("/api/results", get(results))
        .route("/preview/{token}/", get(preview_root))
        .route("/preview/{token}/{*path}", get(preview_file))
        .with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves the arena on `addr` until Ctrl-C.
pub async fn serve(arena: Arc<Arena>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let token = std::env::var(ADMIN_TOKEN_ENV).ok();
    if token.is_none() {
        log::warn!("{ADMIN_TOKEN_ENV} is not set; /api/results is disabled");
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("arena listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(arena, token, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
