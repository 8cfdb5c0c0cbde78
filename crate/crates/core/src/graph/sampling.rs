//! Sampling without replacement and the matching concentration bound.

use crate::error::{CanonError, Result};
use crate::linalg::seeded_rng;
use rand::Rng;

/// `n` distinct indices from `0..population`, uniformly, in random order.
pub fn sample_without_replacement(population: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    sample_without_replacement_with(population, n, &mut seeded_rng(seed))
}

pub fn sample_without_replacement_with<R: Rng + ?Sized>(
    population: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n > population {
        return Err(CanonError::InvalidArgument(format!(
            "cannot draw {n} distinct items from {population}"
        )));
    }
    Ok(rand::seq::index::sample(rng, population, n).into_vec())
}

/// `n` independent uniform indices from `0..population`.
pub fn sample_with_replacement_with<R: Rng + ?Sized>(
    population: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if population == 0 && n > 0 {
        return Err(CanonError::InvalidArgument("empty population".into()));
    }
    Ok((0..n).map(|_| rng.random_range(0..population)).collect())
}

/// Mean of `values` over a without-replacement sample of size `n`.
pub fn sampled_mean<R: Rng + ?Sized>(values: &[f64], n: usize, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return Err(CanonError::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    let idx = sample_without_replacement_with(values.len(), n, rng)?;
    Ok(idx.iter().map(|&i| values[i]).sum::<f64>() / n as f64)
}

/// Tail bound for the mean of `n` draws without replacement from `N` values in `[a, b]`:
/// `exp(−2nε² / ((1 − n/N)(1 + 1/n)(b − a)²))`.
#[allow(non_snake_case)]
pub fn concentration_bound(n: usize, N: usize, a: f64, b: f64, eps: f64) -> Result<f64> {
    if n == 0 || n >= N {
        return Err(CanonError::InvalidArgument(format!(
            "need 1 <= n < N, got n = {n}, N = {N}"
        )));
    }
    let ordered = a.is_finite() && b.is_finite() && a < b;
    if !ordered || !eps.is_finite() || eps <= 0.0 {
        return Err(CanonError::InvalidArgument(format!(
            "need finite a < b and eps > 0, got a = {a}, b = {b}, eps = {eps}"
        )));
    }
    let (nf, big) = (n as f64, N as f64);
    let denom = (1.0 - nf / big) * (1.0 + 1.0 / nf) * (b - a).powi(2);
    Ok((-2.0 * nf * eps * eps / denom).exp())
}
