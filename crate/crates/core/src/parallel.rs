//! Minimal ordered fork-join helper.
//!
//! Work items are split into contiguous chunks across at most `threads`
//! scoped workers and the results are returned in input order, so output
//! never depends on scheduling. Used for self-play rounds and read-only
//! evaluation sharding.

/// Number of workers to use: the `VISAVIS_THREADS` env var when set,
/// otherwise the machine's available parallelism.
pub fn default_threads() -> usize {
    if let Ok(v) = std::env::var("VISAVIS_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Apply `f` to `0..n`, preserving index order in the returned Vec.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut out: Vec<Option<T>> = Vec::with_capacity(n);
    out.resize_with(n, || None);
    let f = &f;
    std::thread::scope(|scope| {
        for (w, slot) in out.chunks_mut(chunk).enumerate() {
            let start = w * chunk;
            scope.spawn(move || {
                for (i, s) in slot.iter_mut().enumerate() {
                    *s = Some(f(start + i));
                }
            });
        }
    });
    out.into_iter().map(|s| s.expect("worker filled slot")).collect()
}
