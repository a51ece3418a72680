//! Deterministic data-parallel helpers.
//!
//! Work is always cut into fixed-size chunks whose boundaries depend only on
//! the problem size, never on the number of workers. Chunk results come back
//! in chunk order and callers fold them left to right, so floating-point
//! results are bit-identical for any pool size, and identical to the build
//! without the `parallel` feature.

use std::ops::Range;

/// Default chunk length for streaming loops over sequence indices.
pub const CHUNK: usize = 1 << 16;

/// Split `0..len` into consecutive ranges of at most `chunk` elements.
pub fn chunk_ranges(len: usize, chunk: usize) -> Vec<Range<usize>> {
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(len))
        .collect()
}

/// Apply `f` to every chunk of `0..len`, returning results in chunk order.
pub fn map_chunks<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    map_items(chunk_ranges(len, chunk), f)
}

/// Apply `f` to each item, preserving order.
#[cfg(feature = "parallel")]
pub fn map_items<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Apply `f` to `0..n`, preserving order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_items((0..n).collect(), f)
}

/// Number of worker threads the current pool would use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Run `f` inside a pool with exactly `jobs` workers. Without the
/// `parallel` feature this just calls `f`.
pub fn with_jobs<T: Send, F: FnOnce() -> T + Send>(jobs: usize, f: F) -> T {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_exactly() {
        let r = chunk_ranges(10, 4);
        assert_eq!(r, vec![0..4, 4..8, 8..10]);
        assert!(chunk_ranges(0, 4).is_empty());
    }

    #[test]
    fn results_independent_of_pool_size() {
        let sum = |jobs| {
            with_jobs(jobs, || {
                let parts = map_chunks(100_003, 1000, |r| r.map(|i| (i as f64).sqrt()).sum::<f64>());
                parts.into_iter().fold(0.0, |a, b| a + b)
            })
        };
        let one = sum(1);
        assert_eq!(one.to_bits(), sum(3).to_bits());
        assert_eq!(one.to_bits(), sum(8).to_bits());
    }
}
