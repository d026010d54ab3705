//! Background search jobs. At most `max_running` run at once; the rest
//! wait as `Pending`. Progress is a snapshot behind a short-lived lock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use fractile::search::{run_search_with, SearchConfig, SearchStats};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::collection::Collection;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobState {
    Pending,
    Running,
    Done,
    Cancelled,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Cancelled | JobState::Failed)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobProgress {
    pub tried: usize,
    pub found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchJob {
    pub id: String,
    pub state: JobState,
    pub cancel_requested: bool,
    pub progress: JobProgress,
    pub budget: usize,
    /// Ids of the accepted records, in rank order.
    pub result_ids: Vec<String>,
    pub stats: Option<SearchStats>,
    pub error: Option<String>,
    pub config: SearchConfig,
}

struct Job {
    snapshot: Mutex<SearchJob>,
    cancel: AtomicBool,
}

#[derive(Debug, PartialEq, Eq)]
pub enum CancelError {
    Unknown,
    AlreadyFinished(JobState),
}

pub struct Jobs {
    jobs: Mutex<BTreeMap<u64, Arc<Job>>>,
    next: AtomicU64,
    slots: Arc<Semaphore>,
    pool: Arc<rayon::ThreadPool>,
}

impl Jobs {
    pub fn new(max_running: usize, workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("search-{i}"))
            .build()
            .expect("search pool");
        Jobs {
            jobs: Mutex::new(BTreeMap::new()),
            next: AtomicU64::new(1),
            slots: Arc::new(Semaphore::new(max_running.max(1))),
            pool: Arc::new(pool),
        }
    }

    fn find(&self, id: &str) -> Option<Arc<Job>> {
        let n: u64 = id.parse().ok()?;
        self.jobs.lock().unwrap().get(&n).cloned()
    }

    pub fn get(&self, id: &str) -> Option<SearchJob> {
        self.find(id).map(|j| j.snapshot.lock().unwrap().clone())
    }

    pub fn list(&self) -> Vec<SearchJob> {
        self.jobs
            .lock()
            .unwrap()
            .values()
            .map(|j| j.snapshot.lock().unwrap().clone())
            .collect()
    }

    /// Queues a job; it starts once a running slot frees up. The config
    /// must already be validated.
    pub fn start(&self, config: SearchConfig, collection: Arc<Collection>) -> SearchJob {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        let job = Arc::new(Job {
            snapshot: Mutex::new(SearchJob {
                id: n.to_string(),
                state: JobState::Pending,
                cancel_requested: false,
                progress: JobProgress::default(),
                budget: config.budget,
                result_ids: Vec::new(),
                stats: None,
                error: None,
                config,
            }),
            cancel: AtomicBool::new(false),
        });
        self.jobs.lock().unwrap().insert(n, job.clone());
        let first = job.snapshot.lock().unwrap().clone();
        let slots = self.slots.clone();
        let pool = self.pool.clone();
        tokio::spawn(async move {
            let Ok(_permit) = slots.acquire_owned().await else {
                return;
            };
            {
                let mut s = job.snapshot.lock().unwrap();
                if s.state != JobState::Pending {
                    return;
                }
                s.state = JobState::Running;
            }
            let worker = job.clone();
            let outcome = tokio::task::spawn_blocking(move || run(&worker, &pool, &collection)).await;
            if let Err(e) = outcome {
                let mut s = job.snapshot.lock().unwrap();
                s.state = JobState::Failed;
                s.error = Some(format!("search task panicked: {e}"));
            }
        });
        first
    }

    /// Pending jobs are cancelled at once; running ones stop after the
    /// current generation and keep their partial results.
    pub fn cancel(&self, id: &str) -> Result<SearchJob, CancelError> {
        let job = self.find(id).ok_or(CancelError::Unknown)?;
        let mut s = job.snapshot.lock().unwrap();
        match s.state {
            JobState::Done | JobState::Failed => return Err(CancelError::AlreadyFinished(s.state)),
            JobState::Cancelled => {}
            JobState::Pending => {
                s.state = JobState::Cancelled;
                s.cancel_requested = true;
            }
            JobState::Running => {
                s.cancel_requested = true;
                job.cancel.store(true, Ordering::Relaxed);
            }
        }
        Ok(s.clone())
    }
}

fn run(job: &Job, pool: &rayon::ThreadPool, collection: &Collection) {
    let config = job.snapshot.lock().unwrap().config.clone();
    let result = pool.install(|| {
        run_search_with(&config, &job.cancel, |p| {
            let mut s = job.snapshot.lock().unwrap();
            s.progress = JobProgress {
                tried: p.tried,
                found: p.found,
            };
        })
    });
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let mut s = job.snapshot.lock().unwrap();
            s.state = JobState::Failed;
            s.error = Some(e.to_string());
            return;
        }
    };
    let ids: Vec<String> = report.records.iter().map(|r| r.id.clone()).collect();
    let stored = collection.append(report.records);
    let mut s = job.snapshot.lock().unwrap();
    s.progress = JobProgress {
        tried: report.stats.tried,
        found: report.stats.found,
    };
    s.result_ids = ids;
    s.stats = Some(report.stats);
    match stored {
        Ok(_) => {
            s.state = if report.cancelled {
                JobState::Cancelled
            } else {
                JobState::Done
            }
        }
        Err(e) => {
            s.state = JobState::Failed;
            s.error = Some(format!("could not persist results: {e}"));
        }
    }
}
