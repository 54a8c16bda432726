//! Order-preserving map helpers that run on a rayon pool when the `parallel`
//! feature is enabled and fall back to a plain sequential loop otherwise.
//!
//! Callers hand in an indexable workload and get results back **in input
//! order**, so downstream aggregation is deterministic no matter how many
//! worker threads execute the closures. `map_indexed_seq` is always
//! sequential; benchmarks use it as the baseline against `map_indexed`.

/// Maps `f` over `0..len`, preserving index order in the output.
///
/// With the `parallel` feature the closures run on the current rayon pool
/// (so a caller can bound the thread count with `ThreadPool::install`);
/// without it this is exactly `map_indexed_seq`.
#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

/// Sequential implementation used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    map_indexed_seq(len, f)
}

/// Always-sequential variant of [`map_indexed`]; the comparison baseline.
pub fn map_indexed_seq<R, F>(len: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..len).map(f).collect()
}

/// Runs `work` with the worker-thread count bounded by `threads`.
///
/// With the `parallel` feature, `Some(t)` builds a dedicated `t`-thread pool
/// for the call; `None` uses the default pool. Without the feature the bound
/// is meaningless (everything is sequential) and `work` just runs. Results
/// are identical either way — the pool only changes scheduling.
#[cfg(feature = "parallel")]
pub fn with_thread_limit<R, W>(threads: Option<usize>, work: W) -> R
where
    R: Send,
    W: FnOnce() -> R + Send,
{
    match threads {
        None => work(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("building a rayon pool cannot fail with default settings")
            .install(work),
    }
}

/// Sequential build: the bound is a no-op.
#[cfg(not(feature = "parallel"))]
pub fn with_thread_limit<R, W>(threads: Option<usize>, work: W) -> R
where
    R: Send,
    W: FnOnce() -> R + Send,
{
    let _ = threads;
    work()
}
