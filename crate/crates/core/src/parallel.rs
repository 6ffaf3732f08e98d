//! Thread-pool access honouring the `OFFGRID_THREADS` cap.
//!
//! All parallel reductions in the crate are written so that their result does
//! not depend on the number of worker threads: work is split into fixed-size
//! chunks and partial results are combined in chunk order.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

static POOL: OnceLock<ThreadPool> = OnceLock::new();

/// Number of worker threads requested through `OFFGRID_THREADS`, if any.
pub fn thread_cap() -> Option<usize> {
    std::env::var("OFFGRID_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// The crate-wide pool. Built lazily on first use.
pub fn pool() -> &'static ThreadPool {
    POOL.get_or_init(|| {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to build thread pool")
    })
}

/// Run `f` inside the crate pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
