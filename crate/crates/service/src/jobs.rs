//! In-memory job registry for module analyses.

use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use comrat_core::pipeline::Progress;
use comrat_core::report::AnalysisReport;
use comrat_core::LabelledDataset;
use indexmap::IndexMap;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Fetching,
    Classifying,
    Analyzing,
    Done,
    Failed,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Queued => "queued",
            Self::Fetching => "fetching",
            Self::Classifying => "classifying",
            Self::Analyzing => "analyzing",
            Self::Done => "done",
            Self::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }

    /// Forward along queued..done, or from any live state to failed.
    pub fn can_move_to(self, next: JobState) -> bool {
        if self.is_terminal() {
            return false;
        }
        next == Self::Failed || next > self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct JobProgress {
    pub fetched_commits: usize,
    pub classified_sentences: usize,
    pub total_sentences: Option<usize>,
}

pub struct JobResult {
    pub dataset: LabelledDataset,
    pub report: AnalysisReport,
    /// Serialized report, as served.
    pub report_json: String,
    pub csv: Vec<u8>,
}

/// Status document returned by `GET /api/jobs/{id}`.
#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub id: String,
    pub module_url: String,
    pub state: JobState,
    pub progress: JobProgress,
    pub created_at: DateTime<Utc>,
    pub error: Option<String>,
}

pub struct Job {
    pub status: JobStatus,
    pub result: Option<Arc<JobResult>>,
}

impl Job {
    fn apply(&mut self, p: Progress) {
        let (state, prog) = (&mut self.status.state, &mut self.status.progress);
        let next = match p {
            Progress::Fetching { fetched_commits } => {
                prog.fetched_commits = prog.fetched_commits.max(fetched_commits);
                JobState::Fetching
            }
            Progress::Classifying {
                classified_sentences,
                total_sentences,
            } => {
                prog.classified_sentences = prog.classified_sentences.max(classified_sentences);
                prog.total_sentences = Some(total_sentences);
                JobState::Classifying
            }
            Progress::Analyzing => JobState::Analyzing,
        };
        if state.can_move_to(next) {
            *state = next;
        }
    }
}

/// Jobs keyed by id in least-recently-used order. When over capacity the
/// least recently touched finished job is dropped; running jobs are kept.
pub struct Registry {
    cap: usize,
    jobs: Mutex<IndexMap<String, Job>>,
}

pub enum Lookup<T> {
    Missing,
    Found(T),
}

impl Registry {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            jobs: Mutex::new(IndexMap::new()),
        }
    }

    pub fn create(&self, module_url: &str, now: DateTime<Utc>) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = Job {
            status: JobStatus {
                id: id.clone(),
                module_url: module_url.to_string(),
                state: JobState::Queued,
                progress: JobProgress::default(),
                created_at: now,
                error: None,
            },
            result: None,
        };
        let mut jobs = self.jobs.lock().unwrap();
        jobs.insert(id.clone(), job);
        while jobs.len() > self.cap {
            let Some(victim) = jobs.iter().position(|(_, j)| j.status.state.is_terminal()) else {
                break;
            };
            jobs.shift_remove_index(victim);
        }
        id
    }

    /// Reads a job and marks it most recently used.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&Job) -> T) -> Lookup<T> {
        let mut jobs = self.jobs.lock().unwrap();
        let Some(idx) = jobs.get_index_of(id) else {
            return Lookup::Missing;
        };
        let last = jobs.len() - 1;
        jobs.move_index(idx, last);
        Lookup::Found(f(&jobs[last]))
    }

    pub fn progress(&self, id: &str, p: Progress) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            job.apply(p);
        }
    }

    pub fn finish(&self, id: &str, result: JobResult) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            if job.status.state.can_move_to(JobState::Done) {
                job.status.state = JobState::Done;
                job.result = Some(Arc::new(result));
            }
        }
    }

    pub fn fail(&self, id: &str, message: String) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            if job.status.state.can_move_to(JobState::Failed) {
                job.status.state = JobState::Failed;
                job.status.error = Some(message);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
