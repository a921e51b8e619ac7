use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use kerr_qsd::ensemble::Executor;

/// Environment variable holding the worker count. Results never depend on it.
pub const WORKERS_ENV: &str = "KERR_QSD_WORKERS";

/// Scoped-thread pool pulling indices from a shared counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threads {
    workers: usize,
}

impl Threads {
    pub fn new(workers: usize) -> Self {
        Threads { workers: workers.max(1) }
    }

    /// Worker count from the environment, else the available parallelism.
    pub fn from_env() -> Self {
        let n = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        Threads::new(n)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Executor for Threads {
    fn map<T, F>(&self, range: Range<usize>, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let start = range.start;
        let len = range.len();
        let workers = self.workers.min(len);
        if workers <= 1 {
            return range.map(job).collect();
        }
        let next = AtomicUsize::new(0);
        let done: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(len));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        if k >= len {
                            break;
                        }
                        local.push((k, job(start + k)));
                    }
                    done.lock().unwrap_or_else(|e| e.into_inner()).extend(local);
                });
            }
        });
        let mut out = done.into_inner().unwrap_or_else(|e| e.into_inner());
        out.sort_by_key(|(k, _)| *k);
        out.into_iter().map(|(_, v)| v).collect()
    }
}
