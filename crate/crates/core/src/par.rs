//! Deterministic parallel trials.
//!
//! Trial `k` always draws from `base.substream(k)`, so a run gives the same
//! answer on any number of threads. Results are either collected in trial
//! order or merged with an exact (integer) reduction.

use rayon::prelude::*;

use crate::rng::RngStream;

/// `f(k, rng_k)` for `k in 0..trials`, in trial order.
pub fn map_trials<T, F>(base: &RngStream, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = base.substream(k);
            f(k, &mut rng)
        })
        .collect()
}

/// Folds trials into per-thread accumulators and merges them. Only use
/// with reductions that are exactly associative and commutative.
pub fn fold_trials<A, F, M>(base: &RngStream, trials: u64, init: impl Fn() -> A + Sync + Send, fold: F, merge: M) -> A
where
    A: Send,
    F: Fn(&mut A, &mut RngStream) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .fold(&init, |mut acc, k| {
            let mut rng = base.substream(k);
            fold(&mut acc, &mut rng);
            acc
        })
        .reduce(&init, merge)
}
