//! Deterministic work splitting. Results never depend on the number of
//! workers: work is cut into fixed-size chunks, each chunk is folded
//! sequentially, and chunk results are merged in a fixed binary tree.

/// Work items per chunk for field accumulations.
pub const CHUNK: usize = 8;

/// `f(0), f(1), ...` in index order, possibly evaluated concurrently.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Folds items `0..count` in chunks of `chunk` and merges the partial states
/// pairwise. Returns `None` when `count == 0`.
pub fn chunked_fold<S, I, B, M>(count: usize, chunk: usize, init: I, body: B, merge: M) -> Option<S>
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    B: Fn(&mut S, usize) + Sync + Send,
    M: Fn(S, S) -> S,
{
    let chunk = chunk.max(1);
    let chunks = count.div_ceil(chunk);
    let parts = map_indexed(chunks, |c| {
        let mut state = init();
        for i in (c * chunk)..((c + 1) * chunk).min(count) {
            body(&mut state, i);
        }
        state
    });
    tree_merge(parts, &merge)
}

fn tree_merge<S>(mut parts: Vec<S>, merge: &impl Fn(S, S) -> S) -> Option<S> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Elementwise `a += b`, used as the merge step for field accumulators.
pub fn add_into(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
    a
}
