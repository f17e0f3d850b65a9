//! Thin blocking client for the vvlab service.

use std::time::Duration;

use thiserror::Error;
use vvlab_proto::{
    CompareRequest, CompareResponse, Config, ErrorBody, ErrorKind, HealthResponse, JobCreated,
    JobInfo, JobRequest, JobState,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service error ({}): {}", .0.kind_name(), .0.message)]
    Service(ErrorBody),
    #[error("job {0} disappeared while polling")]
    JobLost(u64),
}

trait KindName {
    fn kind_name(&self) -> &'static str;
}

impl KindName for ErrorBody {
    fn kind_name(&self) -> &'static str {
        match self.kind {
            ErrorKind::Config => "config",
            ErrorKind::Validation => "validation",
            ErrorKind::Solver => "solver",
            ErrorKind::Verdict => "verdict",
            ErrorKind::Internal => "internal",
        }
    }
}

impl ClientError {
    /// Exit code the CLI should use for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Service(body) => body.kind.exit_code(),
            _ => 1,
        }
    }
}

pub struct VvlabClient {
    base: String,
    http: reqwest::blocking::Client,
    poll_interval: Duration,
}

impl VvlabClient {
    pub fn new(base_url: &str) -> Self {
        VvlabClient {
            base: base_url.trim_end_matches('/').to_string(),
            http: reqwest::blocking::Client::new(),
            poll_interval: Duration::from_millis(100),
        }
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn decode<T: serde::de::DeserializeOwned>(
        resp: reqwest::blocking::Response,
    ) -> Result<T, ClientError> {
        if resp.status().is_success() {
            Ok(resp.json()?)
        } else {
            let body: ErrorBody = resp.json().unwrap_or(ErrorBody {
                kind: ErrorKind::Internal,
                message: "unparseable error body".into(),
            });
            Err(ClientError::Service(body))
        }
    }

    pub fn health(&self) -> Result<HealthResponse, ClientError> {
        Self::decode(self.http.get(self.url("/v1/health")).send()?)
    }

    fn submit(&self, endpoint: &str, config: &Config) -> Result<u64, ClientError> {
        let req = JobRequest { config: config.clone() };
        let created: JobCreated =
            Self::decode(self.http.post(self.url(endpoint)).json(&req).send()?)?;
        Ok(created.job_id)
    }

    pub fn submit_simulate(&self, config: &Config) -> Result<u64, ClientError> {
        self.submit("/v1/simulate", config)
    }

    pub fn submit_sweep(&self, config: &Config) -> Result<u64, ClientError> {
        self.submit("/v1/sweep", config)
    }

    pub fn submit_verify(&self, config: &Config) -> Result<u64, ClientError> {
        self.submit("/v1/verify", config)
    }

    pub fn job(&self, id: u64) -> Result<JobInfo, ClientError> {
        Self::decode(self.http.get(self.url(&format!("/v1/jobs/{id}"))).send()?)
    }

    pub fn jobs(&self) -> Result<Vec<JobInfo>, ClientError> {
        Self::decode(self.http.get(self.url("/v1/jobs")).send()?)
    }

    /// Poll until the job reaches a terminal state; a failed job surfaces
    /// its classified error.
    pub fn wait(&self, id: u64) -> Result<JobInfo, ClientError> {
        loop {
            let info = self.job(id)?;
            match info.state {
                JobState::Done => return Ok(info),
                JobState::Failed => {
                    let body = info.error.unwrap_or(ErrorBody {
                        kind: ErrorKind::Internal,
                        message: "job failed without error body".into(),
                    });
                    return Err(ClientError::Service(body));
                }
                JobState::Queued | JobState::Running => {
                    std::thread::sleep(self.poll_interval);
                }
            }
        }
    }

    pub fn compare(
        &self,
        a: &str,
        b: &str,
        norm_order: u32,
    ) -> Result<CompareResponse, ClientError> {
        let req = CompareRequest { a: a.into(), b: b.into(), norm_order };
        Self::decode(self.http.post(self.url("/v1/compare")).json(&req).send()?)
    }
}
