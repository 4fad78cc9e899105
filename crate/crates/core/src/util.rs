//! Small shared utilities: deterministic parallel mapping.

/// Worker count: `WEYLKIT_THREADS` if set (min 1), else available parallelism.
pub fn thread_count() -> usize {
    if let Ok(s) = std::env::var("WEYLKIT_THREADS") {
        if let Ok(n) = s.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Map `f` over `items` on up to [`thread_count`] workers.
///
/// Results are returned in input order regardless of scheduling, so output
/// is byte-identical for any worker count.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = thread_count().min(items.len().max(1));
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let f = &f;
        let mut handles = Vec::new();
        for (w, slot_chunk) in out.chunks_mut(chunk).enumerate() {
            let start = w * chunk;
            handles.push(scope.spawn(move || {
                for (k, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = Some(f(&items[start + k]));
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });
    out.into_iter().map(|r| r.expect("slot filled")).collect()
}
