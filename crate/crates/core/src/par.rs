//! Ordered batch evaluation, parallel when the `parallel` feature is on.
//!
//! Campaigns walk trace indices in fixed-size batches and consume the
//! results in index order, so the outcome never depends on the number of
//! workers.

use std::ops::{ControlFlow, Range};
use std::sync::atomic::{AtomicBool, Ordering};

pub const BATCH: u64 = 4096;

pub fn map_ordered<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

/// Feed `produce(i)` for i = 0, 1, ... to `consume` in order until it
/// breaks, `limit` indices have been used, or `stop` is raised. Returns the
/// number of indices consumed and whether the run was interrupted.
pub fn drive<T, P, C>(limit: u64, stop: Option<&AtomicBool>, produce: P, mut consume: C) -> (u64, bool)
where
    T: Send,
    P: Fn(u64) -> T + Sync + Send,
    C: FnMut(u64, T) -> ControlFlow<()>,
{
    let mut next = 0u64;
    while next < limit {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            return (next, true);
        }
        let end = (next + BATCH).min(limit);
        let out = map_ordered(next..end, &produce);
        for (i, v) in (next..end).zip(out) {
            if consume(i, v).is_break() {
                return (i + 1, false);
            }
        }
        next = end;
    }
    (next, false)
}
