//! Independent seeded trials.
//!
//! Trial `i` always draws from stream `i` of a ChaCha8 generator keyed by the
//! master seed, so results do not depend on how trials are scheduled. With the
//! `parallel` feature, [`run_trials`] spreads trials over the rayon pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn run_trials_sequential<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T,
{
    (0..n)
        .map(|i| f(i, &mut trial_rng(seed, i as u64)))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn run_trials_parallel<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| f(i, &mut trial_rng(seed, i as u64)))
        .collect()
}

/// Results in trial-index order, parallel when the feature is enabled.
pub fn run_trials<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(n, seed, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(n, seed, f)
    }
}
