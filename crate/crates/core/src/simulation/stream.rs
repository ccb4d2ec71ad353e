//! Per-replication random streams and the replication driver.
//!
//! Replication `r` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `r`
//! (`set_stream(r)`). ChaCha's 64-bit stream id selects one of 2⁶⁴
//! independent keystreams, so a replication's draws depend only on
//! `(seed, r)` and never on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Values that can be merged across replications. Merging must be
/// associative and commutative so the total is independent of scheduling.
pub trait Tally: Send + Sized {
    fn merge(self, other: Self) -> Self;
}

/// Runs `job(r)` for every replication `r < reps` and merges the results.
///
/// `threads = None` uses all available cores; `Some(1)` runs on the
/// calling thread.
pub fn run_replications<T, F>(reps: u64, threads: Option<usize>, job: F) -> Result<Option<T>>
where
    T: Tally,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads != Some(1) {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| crate::error::Error::InvalidPlan(format!("thread pool: {e}")))?;
            return pool.install(|| {
                (0..reps)
                    .into_par_iter()
                    .map(|r| job(r).map(Some))
                    .try_reduce(|| None, |a, b| Ok(merge_opt(a, b)))
            });
        }
    }
    let _ = threads;
    let mut acc = None;
    for r in 0..reps {
        acc = merge_opt(acc, Some(job(r)?));
    }
    Ok(acc)
}

fn merge_opt<T: Tally>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.merge(b)),
        (a, None) => a,
        (None, b) => b,
    }
}
