//! Small inference helpers for comparing simulated outcomes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::ecdf;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Lower bound of a one-sided percentile bootstrap interval for the mean over
/// strata of `mean(x) - mean(y)`.
///
/// Each stratum is resampled with replacement independently, so the interval
/// respects the design (e.g. one stratum per incentive value).
pub fn stratified_bootstrap_lower(
    strata: &[(Vec<f64>, Vec<f64>)],
    confidence: f64,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    if strata.is_empty() || strata.iter().any(|(x, y)| x.is_empty() || y.is_empty()) {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resample = |xs: &[f64], rng: &mut ChaCha8Rng| {
        (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).sum::<f64>() / xs.len() as f64
    };
    let mut stats: Vec<f64> = (0..replicates.max(1))
        .map(|_| {
            strata
                .iter()
                .map(|(x, y)| resample(x, &mut rng) - resample(y, &mut rng))
                .sum::<f64>()
                / strata.len() as f64
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let idx = (((1.0 - confidence) * stats.len() as f64).floor() as usize).min(stats.len() - 1);
    Ok(stats[idx])
}

/// Point estimate matching [`stratified_bootstrap_lower`].
pub fn stratified_mean_difference(strata: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    strata.iter().map(|(x, y)| mean(x) - mean(y)).sum::<f64>() / strata.len() as f64
}

/// One-sided two-sample Kolmogorov-Smirnov test of "`x` is stochastically
/// larger than `y`". Returns `(D, p)` where `D = sup (F_y - F_x)` and `p` is
/// the asymptotic `exp(-2 D^2 nm / (n + m))`.
pub fn ks_greater(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let fx = ecdf(x)?;
    let fy = ecdf(y)?;
    let d = x
        .iter()
        .chain(y)
        .map(|&v| fy.eval(v) - fx.eval(v))
        .fold(0.0_f64, f64::max);
    let (n, m) = (x.len() as f64, y.len() as f64);
    Ok((d, (-2.0 * d * d * n * m / (n + m)).exp()))
}
