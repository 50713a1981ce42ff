//! Sequential / data-parallel execution switch.
//!
//! Every kernel that has a parallel form takes an [`Exec`]. With the
//! `parallel` feature disabled, [`Exec::Parallel`] silently runs the
//! sequential code path, so callers never need their own `cfg` gates.

/// How a data-parallel kernel should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when this build can actually run work on a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Order-preserving map over `0..n`.
pub(crate) fn map_range<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Apply `f(chunk_index, chunk)` to consecutive `chunk_len`-sized chunks,
/// reporting the first error by chunk order.
pub(crate) fn try_for_each_chunk_mut<T, E, F>(
    data: &mut [T],
    chunk_len: usize,
    exec: Exec,
    f: F,
) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(usize, &mut [T]) -> Result<(), E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        let results: Vec<Result<(), E>> = data
            .par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(k, c)| f(k, c))
            .collect();
        return results.into_iter().collect();
    }
    let _ = exec;
    for (k, c) in data.chunks_mut(chunk_len).enumerate() {
        f(k, c)?;
    }
    Ok(())
}
