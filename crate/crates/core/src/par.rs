//! Thin switch between rayon and sequential iteration.
//!
//! Every helper here hands each worker a disjoint chunk or index and never
//! reduces across workers, so results do not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many scalar elements the sequential path is used regardless.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 1 << 14;

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Calls `f(chunk_index, chunk)` for each `chunk_len`-sized piece of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if chunk_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if data.len() >= MIN_PARALLEL_LEN {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Maps `f` over `0..n`, keeping index order. `work_hint` is the approximate
/// number of scalar operations per item and decides whether to fan out.
pub fn map_range<R, F>(n: usize, work_hint: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n > 1 && n.saturating_mul(work_hint) >= MIN_PARALLEL_LEN {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = work_hint;
    (0..n).map(f).collect()
}

/// Elementwise `out[i] = f(a[i], b[i])`.
pub fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if a.len() >= MIN_PARALLEL_LEN {
        return a.par_iter().zip(b.par_iter()).map(|(&x, &y)| f(x, y)).collect();
    }
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Elementwise `out[i] = f(a[i])`.
pub fn map(a: &[f64], f: impl Fn(f64) -> f64 + Sync + Send) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    if a.len() >= MIN_PARALLEL_LEN {
        return a.par_iter().map(|&x| f(x)).collect();
    }
    a.iter().map(|&x| f(x)).collect()
}
