//! HTTP/JSON service exposing the solver operations.
//!
//! Long-running work (simulate, sweep, verify) runs as jobs: submission
//! returns an id immediately and `GET /v1/jobs/{id}` reports progress and
//! the outcome. `compare` is synchronous. All artifacts (snapshots, logs,
//! reports, the resolved config) are written under the configured
//! `output_dir` on the service host.

mod jobs;
mod work;

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

use vvlab_proto::{
    CompareRequest, CompareResponse, ErrorBody, ErrorKind, HealthResponse, JobCreated, JobInfo,
    JobKind, JobRequest,
};

pub use jobs::JobRegistry;

/// Shared service state.
#[derive(Clone)]
pub struct AppState {
    jobs: Arc<JobRegistry>,
}

impl AppState {
    pub fn new() -> Self {
        AppState { jobs: Arc::new(JobRegistry::new()) }
    }
}

impl Default for AppState {
    fn default() -> Self {
        Self::new()
    }
}

/// Service error with the wire classification.
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: ErrorKind, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { kind, message: message.into() } }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, ErrorKind::Internal, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router() -> Router {
    router_with_state(AppState::new())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/simulate", post(submit_simulate))
        .route("/v1/sweep", post(submit_sweep))
        .route("/v1/verify", post(submit_verify))
        .route("/v1/compare", post(compare))
        .route("/v1/jobs", get(list_jobs))
        .route("/v1/jobs/{id}", get(job_info))
        .with_state(state)
}

/// Serve on an already-bound listener until the process exits.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

async fn health() -> Json<HealthResponse> {
    Json(HealthResponse { status: "ok".into(), version: vvlab_core::VERSION.into() })
}

fn parse_request(req: &JobRequest, kind: JobKind) -> Result<vvlab_proto::Config, ApiError> {
    // Re-validate through the strict parser so defaulted fields and
    // cross-field consistency hold no matter how the request was built.
    let text = serde_json::to_string(&req.config)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, ErrorKind::Config, e.to_string()))?;
    let config = vvlab_core::config::parse_config(&text)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, ErrorKind::Config, e.to_string()))?;
    // The sweep section travels only with sweep jobs.
    match kind {
        JobKind::Sweep => {
            if config.sweep.is_none() {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    ErrorKind::Config,
                    "sweep job requires the sweep section",
                ));
            }
        }
        JobKind::Simulate | JobKind::Verify => {
            if config.sweep.is_some() {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    ErrorKind::Config,
                    "sweep section is only valid for sweep jobs",
                ));
            }
        }
    }
    Ok(config)
}

async fn submit_simulate(
    State(state): State<AppState>,
    Json(req): Json<JobRequest>,
) -> Result<Json<JobCreated>, ApiError> {
    let config = parse_request(&req, JobKind::Simulate)?;
    let id = state.jobs.submit(JobKind::Simulate, move || work::run_simulate(&config));
    Ok(Json(JobCreated { job_id: id }))
}

async fn submit_sweep(
    State(state): State<AppState>,
    Json(req): Json<JobRequest>,
) -> Result<Json<JobCreated>, ApiError> {
    let config = parse_request(&req, JobKind::Sweep)?;
    let id = state.jobs.submit(JobKind::Sweep, move || work::run_sweep_job(&config));
    Ok(Json(JobCreated { job_id: id }))
}

async fn submit_verify(
    State(state): State<AppState>,
    Json(req): Json<JobRequest>,
) -> Result<Json<JobCreated>, ApiError> {
    let config = parse_request(&req, JobKind::Verify)?;
    let id = state.jobs.submit(JobKind::Verify, move || work::run_verify(&config));
    Ok(Json(JobCreated { job_id: id }))
}

async fn compare(Json(req): Json<CompareRequest>) -> Result<Json<CompareResponse>, ApiError> {
    let result = tokio::task::spawn_blocking(move || work::run_compare(&req)).await.map_err(
        |e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorKind::Internal, e.to_string()),
    )?;
    match result {
        Ok(resp) => Ok(Json(resp)),
        Err((kind, message)) => {
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, kind, message))
        }
    }
}

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<JobInfo>> {
    Json(state.jobs.list())
}

async fn job_info(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<JobInfo>, ApiError> {
    state.jobs.info(id).map(Json).ok_or_else(|| ApiError::not_found(format!("no such job: {id}")))
}
