//! HTTP/JSON API behind the annotation UI.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use csmotive_core::annotation::{AgreementRow, AnnotationError, AnnotationRecord};
use csmotive_core::schema::{LabelSchema, SCHEMA_VERSION};
use csmotive_core::{LabelSet, SwitchInstance};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ProjectConfig;
use crate::io::{read_jsonl, IoError};
use crate::store::AnnotationStore;

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";
/// Implicit subset containing every instance in file order.
pub const ALL_SUBSET: &str = "all";

pub struct AppState {
    instances: Vec<SwitchInstance>,
    by_id: HashMap<String, usize>,
    store: AnnotationStore,
    schema: LabelSchema,
    subsets: BTreeMap<String, Vec<String>>,
    annotators: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("instance id `{0}` appears twice")]
    DuplicateInstance(String),
    #[error("subset `{subset}` names unknown instance `{id}`")]
    UnknownSubsetMember { subset: String, id: String },
}

impl AppState {
    pub fn new(
        instances: Vec<SwitchInstance>,
        store: AnnotationStore,
        subsets: BTreeMap<String, Vec<String>>,
        annotators: Vec<String>,
    ) -> Result<Self, StateError> {
        let mut by_id = HashMap::new();
        for (i, inst) in instances.iter().enumerate() {
            if by_id.insert(inst.id.clone(), i).is_some() {
                return Err(StateError::DuplicateInstance(inst.id.clone()));
            }
        }
        for (name, ids) in &subsets {
            if let Some(id) = ids.iter().find(|id| !by_id.contains_key(*id)) {
                return Err(StateError::UnknownSubsetMember { subset: name.clone(), id: id.clone() });
            }
        }
        Ok(AppState { instances, by_id, store, schema: LabelSchema::current(), subsets, annotators })
    }

    pub fn from_config(config: &ProjectConfig) -> Result<Self, StateError> {
        let instances = read_jsonl(&config.instances)?;
        let store = AnnotationStore::open(&config.annotations)?;
        Self::new(instances, store, config.subsets.clone(), config.annotators.clone())
    }

    pub fn store(&self) -> &AnnotationStore {
        &self.store
    }

    fn subset(&self, name: Option<&str>) -> Result<Vec<String>, ApiError> {
        match name.unwrap_or(ALL_SUBSET) {
            ALL_SUBSET if !self.subsets.contains_key(ALL_SUBSET) => {
                Ok(self.instances.iter().map(|i| i.id.clone()).collect())
            }
            n => self.subsets.get(n).cloned().ok_or_else(|| ApiError::not_found(format!("unknown subset `{n}`"))),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/schema", get(schema))
        .route("/api/instances", get(list_instances))
        .route("/api/instances/{id}", get(get_instance))
        .route("/api/annotations", post(post_annotation))
        .route("/api/agreement", get(agreement))
        .route("/api/progress", get(progress))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.nest_service("/ui", tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

async fn schema(State(state): State<Arc<AppState>>) -> Json<LabelSchema> {
    Json(state.schema.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    All,
    Unlabeled,
    Labeled,
}

#[derive(Debug, Deserialize)]
pub struct ListQuery {
    annotator: Option<String>,
    #[serde(default)]
    status: Status,
    subset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub transcript_id: String,
    pub focus_line: usize,
    pub text: String,
    /// Whether the requesting annotator has a record; absent without one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceList {
    pub subset: String,
    pub status: Status,
    pub annotator: Option<String>,
    pub total: usize,
    /// First instance of the queue.
    pub next: Option<String>,
    pub instances: Vec<InstanceSummary>,
}

/// The queue is the subset in its stored order, so every annotator sees
/// the same ordering.
async fn list_instances(State(state): State<Arc<AppState>>, Query(q): Query<ListQuery>) -> ApiResult<InstanceList> {
    if q.status != Status::All && q.annotator.is_none() {
        return Err(ApiError::bad_request("status filtering needs an annotator"));
    }
    let ids = state.subset(q.subset.as_deref())?;
    let index = state.store.snapshot();
    let instances: Vec<InstanceSummary> = ids
        .iter()
        .filter_map(|id| {
            let inst = &state.instances[state.by_id[id]];
            let labeled = q.annotator.as_deref().map(|a| index.get(id, a).is_some());
            let keep = match q.status {
                Status::All => true,
                Status::Unlabeled => labeled == Some(false),
                Status::Labeled => labeled == Some(true),
            };
            keep.then(|| InstanceSummary {
                id: inst.id.clone(),
                transcript_id: inst.transcript_id.clone(),
                focus_line: inst.focus_line,
                text: inst.text.clone(),
                labeled,
            })
        })
        .collect();
    Ok(Json(InstanceList {
        subset: q.subset.unwrap_or_else(|| ALL_SUBSET.into()),
        status: q.status,
        annotator: q.annotator,
        total: instances.len(),
        next: instances.first().map(|i| i.id.clone()),
        instances,
    }))
}

#[derive(Debug, Deserialize)]
pub struct InstanceQuery {
    annotator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDetail {
    pub instance: SwitchInstance,
    pub annotations: Vec<AnnotationRecord>,
}

async fn get_instance(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<InstanceQuery>,
) -> ApiResult<InstanceDetail> {
    let &i = state.by_id.get(&id).ok_or_else(|| ApiError::not_found(format!("unknown instance `{id}`")))?;
    let annotations = state.store.with_index(|index| {
        index
            .for_instance(&id)
            .filter(|r| q.annotator.as_deref().is_none_or(|a| r.annotator_id == a))
            .cloned()
            .collect()
    });
    Ok(Json(InstanceDetail { instance: state.instances[i].clone(), annotations }))
}

/// Body of `POST /api/annotations`; `created_at` is filled in by the server
/// when absent.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    instance_id: String,
    annotator_id: String,
    labels: LabelSet,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    schema_version: Option<u32>,
}

async fn post_annotation(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<AnnotationRecord>), ApiError> {
    let sub: Submission =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed annotation: {e}")))?;
    if sub.annotator_id.trim().is_empty() {
        return Err(ApiError::bad_request("annotator_id is empty"));
    }
    if let Some(h) = headers.get(ANNOTATOR_HEADER) {
        if h.to_str().ok() != Some(sub.annotator_id.as_str()) {
            return Err(ApiError::bad_request("annotator header does not match annotator_id"));
        }
    }
    if !state.by_id.contains_key(&sub.instance_id) {
        return Err(ApiError::not_found(format!("unknown instance `{}`", sub.instance_id)));
    }
    let record = AnnotationRecord {
        instance_id: sub.instance_id,
        annotator_id: sub.annotator_id,
        labels: sub.labels,
        created_at: sub.created_at.unwrap_or_else(|| chrono::Utc::now().to_rfc3339()),
        schema_version: Some(sub.schema_version.unwrap_or(SCHEMA_VERSION)),
    };
    record.check_schema().map_err(|e| ApiError::new(StatusCode::CONFLICT, e.to_string()))?;
    state
        .store
        .append(record.clone())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((StatusCode::CREATED, Json(record)))
}

#[derive(Debug, Deserialize)]
pub struct AgreementQuery {
    a: String,
    b: String,
    subset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementView {
    pub a: String,
    pub b: String,
    pub subset: String,
    pub instances: usize,
    /// False while either annotator has instances left; `labels` is then
    /// empty and `missing` counts the absent records.
    pub complete: bool,
    pub missing: usize,
    pub labels: Vec<AgreementRow>,
}

async fn agreement(State(state): State<Arc<AppState>>, Query(q): Query<AgreementQuery>) -> ApiResult<AgreementView> {
    let ids = state.subset(q.subset.as_deref())?;
    let index = state.store.snapshot();
    let missing = ids
        .iter()
        .map(|id| usize::from(index.get(id, &q.a).is_none()) + usize::from(index.get(id, &q.b).is_none()))
        .sum();
    let labels = if missing == 0 {
        match index.agreement_table(&q.a, &q.b, &ids) {
            Ok(rows) => rows,
            Err(AnnotationError::EmptySubset) => Vec::new(),
            Err(e) => return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        }
    } else {
        Vec::new()
    };
    Ok(Json(AgreementView {
        a: q.a,
        b: q.b,
        subset: q.subset.unwrap_or_else(|| ALL_SUBSET.into()),
        instances: ids.len(),
        complete: missing == 0 && !ids.is_empty(),
        missing,
        labels,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ProgressQuery {
    annotator: Option<String>,
    subset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub annotator: String,
    pub completed: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressView {
    pub subset: String,
    pub total: usize,
    pub annotators: Vec<AnnotatorProgress>,
}

/// Without `annotator`, reports the configured roster plus anyone who has
/// submitted records.
async fn progress(State(state): State<Arc<AppState>>, Query(q): Query<ProgressQuery>) -> ApiResult<ProgressView> {
    let ids = state.subset(q.subset.as_deref())?;
    let index = state.store.snapshot();
    let names: Vec<String> = match q.annotator {
        Some(a) => vec![a],
        None => {
            let mut seen: BTreeSet<String> = index.iter().map(|r| r.annotator_id.clone()).collect();
            let mut names: Vec<String> = state.annotators.clone();
            names.iter().for_each(|n| {
                seen.remove(n);
            });
            names.extend(seen);
            names
        }
    };
    let annotators = names
        .into_iter()
        .map(|a| {
            let completed = ids.iter().filter(|id| index.get(id, &a).is_some()).count();
            AnnotatorProgress { annotator: a, completed, remaining: ids.len() - completed }
        })
        .collect();
    Ok(Json(ProgressView { subset: q.subset.unwrap_or_else(|| ALL_SUBSET.into()), total: ids.len(), annotators }))
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: AppState, ui_dir: Option<PathBuf>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("annotation API listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state), ui_dir)).await
}
