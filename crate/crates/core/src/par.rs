//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper preserves input order in its output, so callers get the same
//! result whether or not the `parallel` feature is enabled. Reductions are
//! never performed here; callers fold the ordered results themselves.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How pairwise work should be scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Rayon when compiled with `parallel`, otherwise sequential.
    #[default]
    Auto,
    Sequential,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Auto
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_range<R, F>(n: usize, exec: Exec, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, returning results in slice order.
pub fn map_slice<T, R, F>(items: &[T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fallible variant of [`map_range`]; the first error in index order wins.
pub fn try_map_range<R, E, F>(n: usize, exec: Exec, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    map_range(n, exec, f).into_iter().collect()
}

/// Splits `data` into consecutive chunks of `chunk_len` elements and maps
/// `f(chunk_index, chunk)` over them, returning results in chunk order.
pub fn map_chunks_mut<T, R, F>(data: &mut [T], chunk_len: usize, exec: Exec, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data
            .par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(c, s)| f(c, s))
            .collect();
    }
    let _ = exec;
    data.chunks_mut(chunk_len).enumerate().map(|(c, s)| f(c, s)).collect()
}

/// Fixed chunk boundaries over `0..n`. Chunking never depends on the thread
/// count, which keeps floating-point reductions reproducible.
pub fn chunks(n: usize, chunk: usize) -> Vec<std::ops::Range<usize>> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}
