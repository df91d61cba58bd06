//! Worker-pool plumbing.
//!
//! Per-pattern work is mapped in parallel and collected in index order;
//! every reduction over those results runs sequentially afterwards, so
//! outputs do not depend on the number of workers.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping worker threads (`0` or unset = automatic).
pub const THREADS_ENV: &str = "PROTOSET_THREADS";

/// Runs `f(i)` for `i in 0..n` on the current pool, results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{s}`")))?;
            Ok((n > 0).then_some(n))
        }
    }
}

/// Runs `f` inside a dedicated pool with `threads` workers (`None` = rayon default).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
