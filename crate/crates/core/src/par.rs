//! Row-level data parallelism. With the `parallel` feature these helpers fan
//! out over rayon; without it they run the same closures sequentially.
//!
//! Reductions are never done through rayon: floating-point sums must not depend
//! on how work was split, otherwise outputs would differ run to run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(i, chunk)` for every `len`-long chunk of `data`; with `len` equal
/// to the plane width the chunks are rows.
pub(crate) fn for_each_chunk<F>(data: &mut [f64], len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

/// Maps every item to a result, preserving order.
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
