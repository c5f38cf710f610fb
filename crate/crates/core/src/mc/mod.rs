//! Monte Carlo estimation with Wilson intervals, two-sample KS tests and
//! the verification suites built on them.
//!
//! Ensembles are cut into chunks of `CHUNK_SIZE` draws; chunk `k` draws from
//! `rng.chunk(k)` and results are reduced in chunk order, so output does not
//! depend on the size of the rayon pool.

mod ks;
mod suites;

pub use ks::{kolmogorov_survival, ks_two_sample, KsResult};
pub use suites::{
    domination_from_ensemble, domination_suite, domination_suite_with, invariance_suite, martingale_suite,
    DominationOptions, DominationReport, DominationRow, InvarianceReport, KsComparison, MarkovCheck,
    MartingaleReport, MeanCheck, DOMINATION_CSV_HEADER, KS_LEVEL, MIN_SUITE_SAMPLES,
};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampling::{generate_walk_with, walk_statistics, WalkPath, WalkStats, WishartParams, WishartSampler};

pub const CHUNK_SIZE: usize = 1000;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const MIN_SAMPLES: usize = 100;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let hi = if successes == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub successes: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: Option<RngStream>,
}

impl TailEstimate {
    pub fn from_counts(successes: usize, n: usize, seed: Option<RngStream>) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, n, Z95);
        TailEstimate {
            p_hat: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            n,
            successes,
            ci_low,
            ci_high,
            seed,
        }
    }

    /// Standard error implied by the 95% interval width.
    pub fn sigma(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * Z95)
    }
}

fn chunk_ranges(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(CHUNK_SIZE))
        .map(|k| (k as u64, CHUNK_SIZE.min(n - k * CHUNK_SIZE)))
        .collect()
}

/// Runs `draw` `n` times, chunk `k` on `rng.chunk(k)`, and returns the
/// results in draw order.
pub fn chunked_map<T, F>(n: usize, rng: RngStream, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let chunks: Vec<Result<Vec<T>>> = chunk_ranges(n)
        .into_par_iter()
        .map(|(k, len)| {
            let mut r = rng.chunk(k).rng();
            (0..len).map(|_| draw(&mut r)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Folds `n` draws chunk by chunk (chunk `k` on `rng.chunk(k)`) and merges
/// the chunk accumulators in chunk order.
pub fn chunked_fold<T, I, F, M>(n: usize, rng: RngStream, init: I, step: F, merge: M) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &mut ChaCha8Rng) -> Result<()> + Sync,
    M: Fn(T, T) -> T,
{
    let parts: Vec<Result<T>> = chunk_ranges(n)
        .into_par_iter()
        .map(|(k, len)| {
            let mut r = rng.chunk(k).rng();
            let mut acc = init();
            for _ in 0..len {
                step(&mut acc, &mut r)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for p in parts {
        total = merge(total, p?);
    }
    Ok(total)
}

/// Fraction of `n` independent draws for which `event` holds.
pub fn estimate_probability<F>(event: F, n: usize, rng: RngStream) -> Result<TailEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    if n < MIN_SAMPLES {
        return Err(Error::Invalid(format!("Monte Carlo budget must be at least {MIN_SAMPLES}, got {n}")));
    }
    let hits = chunked_fold(
        n,
        rng,
        || 0usize,
        |c, r| {
            *c += usize::from(event(r)?);
            Ok(())
        },
        |a, b| a + b,
    )?;
    Ok(TailEstimate::from_counts(hits, n, Some(rng)))
}

/// Empirical frequency of `event` over an existing sample.
pub fn estimate_from_sample<T>(sample: &[T], event: impl Fn(&T) -> bool, seed: Option<RngStream>) -> TailEstimate {
    TailEstimate::from_counts(sample.iter().filter(|s| event(s)).count(), sample.len(), seed)
}

/// `count` independent walks of length `n`, each reduced by `f`.
pub fn simulate_walks<T, F>(params: WishartParams, n: usize, count: usize, rng: RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(WalkPath) -> T + Sync,
{
    let sampler = WishartSampler::new(params);
    chunked_map(count, rng, |r| generate_walk_with(&sampler, n, r).map(&f))
}

/// `count` independent walk statistics of length `n`.
pub fn simulate_stats(params: WishartParams, n: usize, count: usize, rng: RngStream) -> Result<Vec<WalkStats>> {
    simulate_walks(params, n, count, rng, |p| walk_statistics(&p))
}
