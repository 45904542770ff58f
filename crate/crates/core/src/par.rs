//! Deterministic parallel helpers.
//!
//! All parallelism in this crate is index-parallel: item `i` of the output is
//! a pure function of `i`, and reductions run serially over the collected
//! vector in index order. Results are therefore bitwise identical for any
//! thread count.

use rayon::prelude::*;

/// Map `f` over `0..n` in parallel, preserving index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel map followed by a serial, index-ordered sum.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).iter().sum()
}
