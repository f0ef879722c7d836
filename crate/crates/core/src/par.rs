//! Fork-join primitives with a sequential fallback.
//!
//! When the `parallel` feature is disabled, or a caller passes
//! `parallel = false`, every primitive runs its closures in order on the
//! calling thread.

/// Runs both closures, potentially in parallel.
#[inline]
pub fn join<A, B, RA, RB>(parallel: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return rayon::join(a, b);
    }
    let _ = parallel;
    (a(), b())
}

/// Applies `f` to every item of `items`. Items are processed in index order
/// when running sequentially.
pub fn for_each<T, F>(parallel: bool, items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        items.into_par_iter().for_each(f);
        return;
    }
    let _ = parallel;
    items.into_iter().for_each(f);
}

/// Maps `f` over `0..len` and collects the results in index order.
pub fn map_indexed<R, F>(parallel: bool, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..len).map(f).collect()
}

/// Folds `0..len` into per-worker accumulators and reduces them.
///
/// The sequential path uses a single accumulator, so `reduce` is never
/// called there.
pub fn fold_reduce<A, I, F, R>(parallel: bool, len: usize, init: I, fold: F, reduce: R) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, usize) -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().fold(&init, &fold).reduce(&init, &reduce);
    }
    let _ = (parallel, &reduce);
    (0..len).fold(init(), fold)
}

/// Number of workers a parallel section would use right now.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` inside a worker pool of exactly `threads` workers
/// (`0` = all available cores). Without the `parallel` feature the thread
/// count is ignored.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build worker pool");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_returns_both() {
        assert_eq!(join(true, || 1, || 2), (1, 2));
        assert_eq!(join(false, || 1, || 2), (1, 2));
    }

    #[test]
    fn map_indexed_keeps_order() {
        let v = with_threads(2, || map_indexed(true, 100, |i| i * i));
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn fold_reduce_sums() {
        let total = fold_reduce(true, 1000, || 0usize, |a, i| a + i, |a, b| a + b);
        assert_eq!(total, 999 * 1000 / 2);
    }
}
