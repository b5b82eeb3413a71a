//! JSON-over-HTTP session API.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mstlens::session::{ProjectionView, SelectionView, SessionOverview, TestView};
use mstlens::{
    CsvSources, Error, GroupsRequest, HeatmapSpec, MetaSummary, ProjectionConfig, Session, SessionInputs,
};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            Error::UnknownRow(_) => StatusCode::NOT_FOUND,
            Error::Singular(_) | Error::DegenerateGroup(_) | Error::NoSharedBipartitions => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::BAD_REQUEST,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Sessions keyed by id. Each session has its own lock, so requests to one
/// session run one at a time while distinct sessions proceed in parallel.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    snapshot_dir: Option<Arc<PathBuf>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Persists every session as `<dir>/<id>.json` after each change and
    /// reloads any snapshots already in `dir`.
    pub fn with_snapshot_dir(dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let state = Self {
            sessions: Arc::default(),
            snapshot_dir: Some(Arc::new(dir.clone())),
        };
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let Some(id) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
                    continue;
                };
                let session = Session::from_json(&std::fs::read_to_string(&path)?)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                state.put(id, session);
            }
        }
        Ok(state)
    }

    fn put(&self, id: String, session: Session) {
        self.sessions
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(id, Arc::new(Mutex::new(session)));
    }

    pub fn insert(&self, session: Session) -> anyhow::Result<String> {
        let id = uuid::Uuid::new_v4().to_string();
        if let Some(dir) = &self.snapshot_dir {
            write_snapshot(dir, &id, &session)?;
        }
        self.put(id.clone(), session);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }

    /// Runs `f` on a blocking thread with the session locked. With
    /// `persist`, the session is snapshotted afterwards.
    async fn run<T, F>(&self, id: String, persist: bool, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session) -> mstlens::Result<T> + Send + 'static,
    {
        let session = self.get(&id)?;
        let dir = self.snapshot_dir.clone().filter(|_| persist);
        tokio::task::spawn_blocking(move || {
            let mut guard = session.lock().unwrap_or_else(PoisonError::into_inner);
            let out = f(&mut guard)?;
            if let Some(dir) = dir {
                if let Err(e) = write_snapshot(&dir, &id, &guard) {
                    tracing::warn!(session = %id, "snapshot failed: {e}");
                }
            }
            Ok(Json(out))
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
    }
}

fn write_snapshot(dir: &Path, id: &str, session: &Session) -> anyhow::Result<()> {
    let tmp = dir.join(format!("{id}.json.tmp"));
    std::fs::write(&tmp, session.to_json()?)?;
    std::fs::rename(&tmp, dir.join(format!("{id}.json")))?;
    Ok(())
}

/// CSV text for each input table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub data: String,
    pub embedding: String,
    pub labels: String,
    #[serde(default)]
    pub meta: Option<String>,
    #[serde(default)]
    pub pca_dims: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    #[serde(flatten)]
    pub overview: SessionOverview,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRequest {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TestRequest {
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Comma-separated row ids and feature names.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct HeatmapQuery {
    pub rows: Option<String>,
    pub features: Option<String>,
}

fn split_list(s: &Option<String>) -> Option<Vec<String>> {
    s.as_ref().map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect()
    })
}

async fn create_session(State(state): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<Created> {
    let session = tokio::task::spawn_blocking(move || {
        let inputs = SessionInputs::from_csv(CsvSources {
            data: ("data", &req.data),
            embedding: ("embedding", &req.embedding),
            labels: ("labels", &req.labels),
            meta: req.meta.as_deref().map(|m| ("meta", m)),
        })?;
        Session::new(inputs, req.pca_dims)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let overview = session.overview();
    let id = state.insert(session).map_err(|e| ApiError::internal(e.to_string()))?;
    tracing::info!(session = %id, points = overview.ids.len(), "session created");
    Ok(Json(Created { id, overview }))
}

async fn overview(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionOverview> {
    state.run(id, false, |s| Ok(s.overview())).await
}

async fn select_path(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<PathRequest>,
) -> ApiResult<SelectionView> {
    state.run(id, true, move |s| s.select_path(&req.a, &req.b)).await
}

async fn select_groups(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<GroupsRequest>,
) -> ApiResult<SelectionView> {
    state.run(id, true, move |s| s.select_groups(&req)).await
}

async fn project(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(config): Json<ProjectionConfig>,
) -> ApiResult<ProjectionView> {
    state.run(id, true, move |s| s.project(&config)).await
}

async fn run_test(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<TestRequest>,
) -> ApiResult<TestView> {
    state.run(id, false, move |s| s.run_test(req.replicates, req.seed)).await
}

async fn heatmap(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HeatmapQuery>,
) -> ApiResult<HeatmapSpec> {
    let rows = split_list(&q.rows);
    let features = split_list(&q.features);
    state
        .run(id, false, move |s| s.heatmap(rows.as_deref(), features.as_deref()))
        .await
}

async fn meta(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<MetaSummary> {
    state.run(id, false, |s| s.meta()).await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", get(overview))
        .route("/session/{id}/path", post(select_path))
        .route("/session/{id}/groups", post(select_groups))
        .route("/session/{id}/project", post(project))
        .route("/session/{id}/test", post(run_test))
        .route("/session/{id}/heatmap", get(heatmap))
        .route("/session/{id}/meta", get(meta))
        .with_state(state)
}
