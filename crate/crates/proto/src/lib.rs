//! Wire types for the HTTP/JSON API.
//!
//! Errors carry a machine-readable `kind` so clients can map failures to
//! the documented exit-code taxonomy without parsing messages.

use serde::{Deserialize, Serialize};

pub use vvlab_core::config::Config;
pub use vvlab_core::solver::ValidationReport;
pub use vvlab_core::sweep::{ErrorRecord, RateFit, RunSummary, Verdict};

/// Failure classification; maps one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed or inconsistent configuration (exit 2).
    Config,
    /// Initial data or invariant validation failure (exit 3).
    Validation,
    /// Solver abort, e.g. positivity loss or CFL violation (exit 4).
    Solver,
    /// Sweep bound verdict failed (exit 5).
    Verdict,
    /// Anything else (exit 1).
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Solver => 4,
            ErrorKind::Verdict => 5,
            ErrorKind::Internal => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

/// Job submission: the full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobRequest {
    pub config: Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Simulate,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobCreated {
    pub job_id: u64,
}

/// Snapshot paths and end-of-run diagnostics from a simulate job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateOutcome {
    pub snapshot_paths: Vec<String>,
    pub log_path: String,
    pub final_time: f64,
    pub steps: usize,
    pub max_h3: f64,
    pub norm_growth_flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub report_csv: String,
    pub report_json: String,
    pub fits: Vec<RateFit>,
    pub overall_verdict: Verdict,
    pub records: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub validation: ValidationReport,
    /// Residual summary of the short invariant run.
    pub steps: usize,
    pub max_divergence: f64,
    pub max_trace_residual: f64,
    pub mean_density_drift: f64,
    pub pass: bool,
    pub report_path: String,
}

/// Result payload by job kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JobOutcome {
    Simulate(SimulateOutcome),
    Sweep(SweepOutcome),
    Verify(VerifyOutcome),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobInfo {
    pub id: u64,
    pub kind: JobKind,
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<JobOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRequest {
    pub a: String,
    pub b: String,
    pub norm_order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareResponse {
    pub distance: f64,
    pub norm_order: u32,
}
