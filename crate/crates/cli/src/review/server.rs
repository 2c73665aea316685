//! HTTP API for the review step. Every accepted decision is written to the
//! queue file before the response is sent.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use super::queue::{Decision, QueueError, ReviewItem, ReviewQueue};
use crate::error::{CliError, CliResult};

pub struct ReviewState {
    queue: Mutex<ReviewQueue>,
    queue_path: PathBuf,
    matrix_path: Option<PathBuf>,
}

impl ReviewState {
    pub fn open(queue_path: &Path, matrix_path: Option<&Path>) -> CliResult<Self> {
        Ok(ReviewState {
            queue: Mutex::new(ReviewQueue::load(queue_path)?),
            queue_path: queue_path.to_path_buf(),
            matrix_path: matrix_path.map(Path::to_path_buf),
        })
    }
}

type Shared = Arc<ReviewState>;

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match self.0 {
            StatusCode::BAD_REQUEST => "bad_request",
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            _ => "internal",
        };
        (self.0, Json(json!({"error": code, "message": self.1}))).into_response()
    }
}

impl From<QueueError> for ApiError {
    fn from(e: QueueError) -> Self {
        let status = match e {
            QueueError::UnknownPost(_) => StatusCode::NOT_FOUND,
            QueueError::IllegalTransition { .. } => StatusCode::CONFLICT,
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

pub fn router(state: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/queue", get(list_queue))
        .route("/api/posts/{id}", get(get_post))
        .route("/api/decisions", post(post_decision))
        .route("/api/decisions/{id}/undo", post(undo_decision))
        .route("/api/progress", get(progress))
        .route("/api/matrix", get(matrix))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Runs the server until the process is stopped.
pub fn serve(state: ReviewState, port: u16, static_dir: Option<&Path>) -> CliResult<()> {
    let app = router(Arc::new(state), static_dir);
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::user(format!("cannot start runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::user(format!("cannot bind {addr}: {e}")))?;
        log::info!("review server listening on http://{addr}");
        axum::serve(listener, app)
            .await
            .map_err(|e| CliError::user(format!("server error: {e}")))
    })
}

#[derive(Deserialize)]
struct QueueParams {
    disorder: Option<String>,
    status: Option<String>,
    page: Option<usize>,
    per_page: Option<usize>,
}

const DEFAULT_PER_PAGE: usize = 25;
const MAX_PER_PAGE: usize = 500;

fn projection(i: &ReviewItem) -> Value {
    json!({
        "post_id": i.post_id,
        "text": i.text,
        "origin_disorder": i.origin_disorder,
        "status": i.decision,
        "note": i.note,
    })
}

async fn list_queue(
    State(s): State<Shared>,
    params: Result<Query<QueueParams>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(p) = params.map_err(|e| bad_request(e.body_text()))?;
    let status = match p.status.as_deref() {
        None | Some("all") => None,
        Some(x) => Some(Decision::parse(x).ok_or_else(|| bad_request(format!("unknown status `{x}`")))?),
    };
    let page = p.page.unwrap_or(1);
    let per_page = p.per_page.unwrap_or(DEFAULT_PER_PAGE);
    if page == 0 || per_page == 0 || per_page > MAX_PER_PAGE {
        return Err(bad_request(format!(
            "page must be >= 1 and per_page within 1..={MAX_PER_PAGE}"
        )));
    }
    let q = s.queue.lock().expect("queue lock");
    let matching: Vec<&ReviewItem> = q
        .items
        .iter()
        .filter(|i| {
            p.disorder
                .as_deref()
                .is_none_or(|d| i.origin_disorder.as_ref().is_some_and(|o| o.as_str() == d))
        })
        .filter(|i| status.is_none_or(|st| i.decision == st))
        .collect();
    let total = matching.len();
    let items: Vec<Value> = matching
        .iter()
        .skip((page - 1) * per_page)
        .take(per_page)
        .map(|i| projection(i))
        .collect();
    Ok(Json(json!({
        "items": items,
        "page": page,
        "per_page": per_page,
        "total": total,
        "pages": total.div_ceil(per_page),
    })))
}

async fn get_post(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<ReviewItem>, ApiError> {
    let q = s.queue.lock().expect("queue lock");
    q.item(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| QueueError::UnknownPost(id).into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    post_id: String,
    decision: String,
    #[serde(default)]
    note: Option<String>,
}

fn persist(s: &ReviewState, q: &ReviewQueue) -> Result<(), ApiError> {
    q.save(&s.queue_path)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn post_decision(State(s): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let b: DecisionBody =
        serde_json::from_slice(&body).map_err(|e| bad_request(format!("malformed decision body: {e}")))?;
    let decision = match Decision::parse(&b.decision) {
        Some(d @ (Decision::Keep | Decision::Remove)) => d,
        _ => return Err(bad_request("decision must be \"keep\" or \"remove\"")),
    };
    let mut q = s.queue.lock().expect("queue lock");
    let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut next = q.clone();
    let changed = next.decide(&b.post_id, decision, b.note, Some(now))?;
    if changed {
        persist(&s, &next)?;
        *q = next;
    }
    let item = q.item(&b.post_id).expect("decided item exists");
    Ok(Json(json!({"changed": changed, "item": item})))
}

async fn undo_decision(State(s): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let mut q = s.queue.lock().expect("queue lock");
    let mut next = q.clone();
    let changed = next.undo(&id)?;
    if changed {
        persist(&s, &next)?;
        *q = next;
    }
    let item = q.item(&id).expect("undone item exists");
    Ok(Json(json!({"changed": changed, "item": item})))
}

async fn progress(State(s): State<Shared>) -> Json<Value> {
    let q = s.queue.lock().expect("queue lock");
    Json(serde_json::to_value(q.progress()).expect("progress serializes"))
}

async fn matrix(State(s): State<Shared>) -> Result<Json<Value>, ApiError> {
    let missing = || {
        ApiError(
            StatusCode::NOT_FOUND,
            "no analysis export found; run `labelforge analyze` first".into(),
        )
    };
    let path = s.matrix_path.as_ref().ok_or_else(missing)?;
    let bytes = std::fs::read(path).map_err(|_| missing())?;
    serde_json::from_slice(&bytes).map(Json).map_err(|e| {
        ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("unreadable analysis export: {e}"),
        )
    })
}
