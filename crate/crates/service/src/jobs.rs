//! In-memory job registry. Compute runs on the blocking thread pool; the
//! registry hands out ids immediately and tracks terminal outcomes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use vvlab_proto::{ErrorBody, JobInfo, JobKind, JobOutcome, JobState};

struct JobEntry {
    kind: JobKind,
    state: JobState,
    outcome: Option<JobOutcome>,
    error: Option<ErrorBody>,
}

pub struct JobRegistry {
    next_id: AtomicU64,
    entries: Mutex<HashMap<u64, JobEntry>>,
}

impl JobRegistry {
    pub fn new() -> Self {
        JobRegistry { next_id: AtomicU64::new(1), entries: Mutex::new(HashMap::new()) }
    }

    /// Register a job and run `work` on the blocking pool. The closure
    /// returns either an outcome or a classified error.
    pub fn submit<F>(self: &Arc<Self>, kind: JobKind, work: F) -> u64
    where
        F: FnOnce() -> Result<JobOutcome, ErrorBody> + Send + 'static,
    {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        {
            let mut entries = self.entries.lock().unwrap();
            entries.insert(id, JobEntry { kind, state: JobState::Queued, outcome: None, error: None });
        }
        let registry = self.clone();
        tokio::task::spawn_blocking(move || {
            registry.set_state(id, JobState::Running);
            match work() {
                Ok(outcome) => {
                    let mut entries = registry.entries.lock().unwrap();
                    if let Some(entry) = entries.get_mut(&id) {
                        entry.state = JobState::Done;
                        entry.outcome = Some(outcome);
                    }
                }
                Err(error) => {
                    let mut entries = registry.entries.lock().unwrap();
                    if let Some(entry) = entries.get_mut(&id) {
                        entry.state = JobState::Failed;
                        entry.error = Some(error);
                    }
                }
            }
        });
        id
    }

    fn set_state(&self, id: u64, state: JobState) {
        let mut entries = self.entries.lock().unwrap();
        if let Some(entry) = entries.get_mut(&id) {
            entry.state = state;
        }
    }

    pub fn info(&self, id: u64) -> Option<JobInfo> {
        let entries = self.entries.lock().unwrap();
        entries.get(&id).map(|e| JobInfo {
            id,
            kind: e.kind,
            state: e.state,
            outcome: e.outcome.clone(),
            error: e.error.clone(),
        })
    }

    pub fn list(&self) -> Vec<JobInfo> {
        let entries = self.entries.lock().unwrap();
        let mut jobs: Vec<JobInfo> = entries
            .iter()
            .map(|(id, e)| JobInfo {
                id: *id,
                kind: e.kind,
                state: e.state,
                outcome: e.outcome.clone(),
                error: e.error.clone(),
            })
            .collect();
        jobs.sort_by_key(|j| j.id);
        jobs
    }
}

impl Default for JobRegistry {
    fn default() -> Self {
        Self::new()
    }
}
