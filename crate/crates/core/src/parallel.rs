//! Worker-pool sizing shared by the Monte Carlo estimators, grid search and sweeps.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable capping the worker count; 0 or unset means one worker per core.
pub const THREADS_ENV: &str = "TWR_THREADS";

fn pool() -> Option<&'static ThreadPool> {
    static POOL: OnceLock<Option<ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var(THREADS_ENV)
            .ok()?
            .trim()
            .parse::<usize>()
            .ok()?;
        if n == 0 {
            return None;
        }
        ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

/// Runs `f` on the configured pool, or on the current rayon pool when no cap is set.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match pool() {
        Some(p) => p.install(f),
        None => f(),
    }
}

pub fn current_threads() -> usize {
    match pool() {
        Some(p) => p.current_num_threads(),
        None => rayon::current_num_threads(),
    }
}
