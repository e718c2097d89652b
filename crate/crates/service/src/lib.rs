//! HTTP service over one scenario: house edits, synchronous view valuation
//! and asynchronous flow jobs.
//!
//! Edits go through a single writer lock. Compute work runs on the blocking
//! pool, at most `workers` at a time. While a flow job is queued or running,
//! a second flow job and any house edit are refused with 409.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use settle_client::api::*;
use settle_core::scenario::{House, Scenario, Terrain};
use tokio::net::TcpListener;
use tokio::sync::{RwLock, Semaphore};
use tower_http::services::ServeDir;

mod compute;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    Compute(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Compute(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(ErrorBody { error: msg })).into_response()
    }
}

impl From<settle_core::Error> for ApiError {
    fn from(e: settle_core::Error) -> Self {
        use settle_core::Error as E;
        match e {
            E::Overlap { .. } | E::Validation(_) => ApiError::Conflict(e.to_string()),
            E::Json(_) | E::Parse { .. } => ApiError::BadRequest(e.to_string()),
            _ => ApiError::Compute(e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone, Debug, Default)]
pub struct Config {
    /// Concurrent compute tasks; 0 means one per core.
    pub workers: usize,
    /// Static UI bundle served under `/`.
    pub ui_dir: Option<PathBuf>,
    /// Default target of `POST /api/scenario/save`.
    pub scenario_path: Option<PathBuf>,
}

struct Session {
    scenario: Scenario,
    terrain: Arc<Terrain>,
}

#[derive(Default)]
struct Jobs {
    table: HashMap<String, JobStatus>,
    /// Queued or running flow job.
    active_flow: Option<String>,
}

#[derive(Default)]
struct Artifacts {
    images: HashMap<String, Vec<u8>>,
    fields: HashMap<String, String>,
}

pub struct AppState {
    session: RwLock<Session>,
    jobs: Mutex<Jobs>,
    artifacts: Mutex<Artifacts>,
    workers: Arc<Semaphore>,
    next_id: AtomicU64,
    config: Config,
}

impl AppState {
    pub fn new(scenario: Scenario, config: Config) -> settle_core::Result<Arc<Self>> {
        let terrain = scenario.terrain()?;
        scenario.validate_with(&terrain)?;
        let workers = match config.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        Ok(Arc::new(AppState {
            session: RwLock::new(Session {
                scenario,
                terrain: Arc::new(terrain),
            }),
            jobs: Mutex::default(),
            artifacts: Mutex::default(),
            workers: Arc::new(Semaphore::new(workers)),
            next_id: AtomicU64::new(1),
            config,
        }))
    }

    fn next_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn set_job(&self, status: JobStatus) {
        let mut jobs = self.jobs.lock().expect("job table lock");
        if matches!(status.status, Status::Done | Status::Failed) && jobs.active_flow.as_deref() == Some(&status.id) {
            jobs.active_flow = None;
        }
        jobs.table.insert(status.id.clone(), status);
    }

    /// Run `f` on the blocking pool once a worker slot is free.
    async fn run_blocking<T: Send + 'static>(&self, f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
        let _permit = self.workers.acquire().await.expect("worker pool is never closed");
        tokio::task::spawn_blocking(f)
            .await
            .unwrap_or_else(|e| Err(ApiError::Compute(format!("compute task panicked: {e}"))))
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/scenario", get(get_scenario))
        .route("/api/scenario/save", post(save_scenario))
        .route("/api/houses/{id}", put(update_house))
        .route("/api/compute/view", post(compute_view))
        .route("/api/compute/flow", post(compute_flow))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/images/{file}", get(get_image))
        .route("/api/fields/{file}", get(get_field));
    let app = match &state.config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

/// Serve until the listener fails.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn get_scenario(State(state): State<Arc<AppState>>) -> Json<Scenario> {
    Json(state.session.read().await.scenario.clone())
}

async fn update_house(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<House>> {
    let update: HouseUpdate = parse(&body)?;
    let mut session = state.session.write().await;
    if let Some(job) = &state.jobs.lock().expect("job table lock").active_flow {
        return Err(ApiError::Conflict(format!("flow job {job} is running; edits wait until it finishes")));
    }
    let mut next = session.scenario.clone();
    let house = next
        .houses
        .iter_mut()
        .find(|h| h.id == id)
        .ok_or_else(|| ApiError::NotFound(format!("no house {id}")))?;
    update.apply(house);
    let house = house.clone();
    next.validate_with(&session.terrain)?;
    session.scenario = next;
    log::info!("house {id} updated");
    Ok(Json(house))
}

async fn compute_view(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: ViewRequest = parse(&body)?;
    let scenario = state.session.read().await.scenario.clone();
    let (mut report, image) = state.run_blocking(move || compute::view(&scenario, &req)).await?;
    let id = format!("img{}", state.next_id());
    state.artifacts.lock().expect("artifact lock").images.insert(id.clone(), image);
    report["image_url"] = json!(format!("/api/images/{id}.ppm"));
    Ok(Json(report))
}

async fn compute_flow(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<JobAccepted>)> {
    let req: FlowRequest = parse(&body)?;
    compute::check_flow_request(&req)?;
    let session = state.session.read().await;
    if session.scenario.flow.is_none() {
        return Err(ApiError::Conflict("the scenario has no flow transect".into()));
    }
    let id = {
        let mut jobs = state.jobs.lock().expect("job table lock");
        if let Some(job) = &jobs.active_flow {
            return Err(ApiError::Conflict(format!("flow job {job} is still running")));
        }
        let id = state.next_id().to_string();
        jobs.active_flow = Some(id.clone());
        jobs.table.insert(id.clone(), job_status(&id, Status::Queued));
        id
    };
    let scenario = session.scenario.clone();
    drop(session);
    tokio::spawn(run_flow(state.clone(), id.clone(), scenario, req));
    let url = format!("/api/jobs/{id}");
    Ok((StatusCode::ACCEPTED, Json(JobAccepted { id, url })))
}

fn job_status(id: &str, status: Status) -> JobStatus {
    JobStatus {
        id: id.to_string(),
        kind: JobKind::Flow,
        status,
        result: None,
        error: None,
    }
}

async fn run_flow(state: Arc<AppState>, id: String, scenario: Scenario, req: FlowRequest) {
    let _permit = state.workers.acquire().await.expect("worker pool is never closed");
    state.set_job(job_status(&id, Status::Running));
    log::info!("flow job {id} started at h = {}", req.h);
    let outcome = tokio::task::spawn_blocking(move || compute::flow(&scenario, &req))
        .await
        .unwrap_or_else(|e| Err(ApiError::Compute(format!("flow task panicked: {e}"))));
    let mut status = job_status(&id, Status::Done);
    match outcome {
        Ok((streamlines, report, vtk)) => {
            state.artifacts.lock().expect("artifact lock").fields.insert(id.clone(), vtk);
            status.result = Some(FlowResult {
                streamlines,
                field_url: format!("/api/fields/{id}.vtk"),
                report,
            });
        }
        Err(e) => {
            let msg = match e {
                ApiError::BadRequest(m) | ApiError::NotFound(m) | ApiError::Conflict(m) | ApiError::Compute(m) => m,
            };
            log::warn!("flow job {id} failed: {msg}");
            status.status = Status::Failed;
            status.error = Some(msg);
        }
    }
    state.set_job(status);
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    let jobs = state.jobs.lock().expect("job table lock");
    jobs.table
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("no job {id}")))
}

async fn get_image(State(state): State<Arc<AppState>>, Path(file): Path<String>) -> ApiResult<Response> {
    let image = file
        .strip_suffix(".ppm")
        .and_then(|id| state.artifacts.lock().expect("artifact lock").images.get(id).cloned())
        .ok_or_else(|| ApiError::NotFound(format!("no image {file}")))?;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], image).into_response())
}

async fn get_field(State(state): State<Arc<AppState>>, Path(file): Path<String>) -> ApiResult<Response> {
    let field = file
        .strip_suffix(".vtk")
        .and_then(|id| state.artifacts.lock().expect("artifact lock").fields.get(id).cloned())
        .ok_or_else(|| ApiError::NotFound(format!("no field {file}")))?;
    Ok(([(header::CONTENT_TYPE, "text/plain")], field).into_response())
}

async fn save_scenario(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<SaveResponse>> {
    let req: SaveRequest = if body.is_empty() { SaveRequest::default() } else { parse(&body)? };
    let path = req
        .path
        .or_else(|| state.config.scenario_path.clone())
        .ok_or_else(|| ApiError::BadRequest("no path given and the server was not started from a file".into()))?;
    let scenario = state.session.read().await.scenario.clone();
    settle_core::scenario::save_scenario(&scenario, &path).map_err(|e| ApiError::Compute(e.to_string()))?;
    Ok(Json(SaveResponse { path }))
}
