//! HTTP front end for the annotation store.
//!
//! Writes go through one write lock, so the event log has a single writer;
//! reads share the folded state.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use stance_nli::annostore::{parse_label, AnnotationError, AnnotationStore, TaskSpec};
use tower_http::services::ServeDir;

pub type SharedStore = Arc<RwLock<AnnotationStore>>;

pub struct ApiError(AnnotationError);

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            AnnotationError::UnknownTask(_) | AnnotationError::UnknownTweet { .. } => StatusCode::NOT_FOUND,
            AnnotationError::NotAssigned { .. } => StatusCode::FORBIDDEN,
            AnnotationError::TaskExists(_) | AnnotationError::NotInDisagreement(_) => StatusCode::CONFLICT,
            AnnotationError::InvalidLabel(_)
            | AnnotationError::AnnotatorCount
            | AnnotationError::EmptyTask
            | AnnotationError::DuplicateTweet(_) => StatusCode::BAD_REQUEST,
            AnnotationError::CorruptLog { .. } | AnnotationError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

#[derive(Deserialize)]
struct LabelBody {
    annotator_id: String,
    tweet_id: String,
    label: String,
}

#[derive(Deserialize)]
struct AdjudicationBody {
    tweet_id: String,
    final_label: String,
}

fn read(store: &SharedStore) -> std::sync::RwLockReadGuard<'_, AnnotationStore> {
    store.read().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn write(store: &SharedStore) -> std::sync::RwLockWriteGuard<'_, AnnotationStore> {
    store.write().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn list_tasks(State(store): State<SharedStore>) -> Json<Vec<String>> {
    Json(read(&store).task_ids().map(str::to_string).collect())
}

async fn create_task(State(store): State<SharedStore>, Json(spec): Json<TaskSpec>) -> ApiResult {
    let id = spec.task_id.clone();
    write(&store).create_task(spec)?;
    Ok((StatusCode::CREATED, Json(json!({ "task_id": id }))).into_response())
}

async fn next_tweet(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult {
    let Some(annotator) = q.annotator else {
        return Ok((StatusCode::BAD_REQUEST, Json(json!({ "error": "missing ?annotator=" }))).into_response());
    };
    Ok(Json(read(&store).next_for(&task, &annotator)?).into_response())
}

async fn submit_label(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Json(body): Json<LabelBody>,
) -> ApiResult {
    let label = parse_label(&body.label)?;
    let mut store = write(&store);
    store.submit_label(&task, &body.annotator_id, &body.tweet_id, label)?;
    let record = store.task(&task)?.label_history().last().cloned();
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn disagreements(State(store): State<SharedStore>, Path(task): Path<String>) -> ApiResult {
    Ok(Json(read(&store).disagreements(&task)?).into_response())
}

async fn adjudicate(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Json(body): Json<AdjudicationBody>,
) -> ApiResult {
    let label = parse_label(&body.final_label)?;
    let record = write(&store).adjudicate(&task, &body.tweet_id, label)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn gold(State(store): State<SharedStore>, Path(task): Path<String>) -> ApiResult {
    Ok(Json(read(&store).gold_labels(&task)?).into_response())
}

async fn status(
    State(store): State<SharedStore>,
    Path(task): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult {
    Ok(Json(read(&store).counts(&task, q.annotator.as_deref())?).into_response())
}

/// Routes for the annotation API, plus static UI assets when `assets` is set.
pub fn router(store: SharedStore, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/tasks", get(list_tasks).post(create_task))
        .route("/tasks/{id}/next", get(next_tweet))
        .route("/tasks/{id}/labels", post(submit_label))
        .route("/tasks/{id}/disagreements", get(disagreements))
        .route("/tasks/{id}/adjudications", post(adjudicate))
        .route("/tasks/{id}/gold", get(gold))
        .route("/tasks/{id}/status", get(status))
        .with_state(store);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(store: AnnotationStore, addr: &str, assets: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("annotation server listening on http://{}", listener.local_addr()?);
    let app = router(Arc::new(RwLock::new(store)), assets);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
