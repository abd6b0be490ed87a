//! Chain diagnostics: effective sample sizes, inverse-gamma marginal fits
//! and a monotone-trend statistic.
//!
//! The source study reports ESS values without naming its estimator, so the
//! estimators here are pinned explicitly: univariate ESS uses the initial
//! positive sequence rule on sample autocorrelations; the multivariate ESS
//! follows the determinant form `n·(det Λ / det Σ_mc)^{1/S}` with a batch
//! means long-run covariance at batch size ⌊√n⌋. Cross-implementation
//! agreement is defined by tolerance bands, not bit equality.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Summary emitted per chain (serialized as JSON by the harness).
#[derive(Debug, Clone)]
pub struct ChainSummary {
    pub ess: f64,
    pub ess_per_dim: Vec<f64>,
    pub invgamma_shape: f64,
    pub invgamma_rate: f64,
    pub trend_tau: f64,
    /// Set when a constant series forced the univariate ESS to 0.
    pub constant_flag: bool,
}

/// Univariate ESS `n / (1 + 2·Σ ρ̂_k)`, truncating the autocorrelation sum
/// at the first negative pairwise sum and clipping the result to (0, n].
/// Constant series are reported as 0.
pub fn ess_univariate(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 10 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    if var == 0.0 {
        return 0.0;
    }
    let autocov = |lag: usize| -> f64 {
        series[..n - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / nf
    };
    let mut sum_rho = 0.0;
    let mut lag = 1usize;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / var;
        if pair < 0.0 {
            break;
        }
        sum_rho += pair;
        lag += 2;
    }
    let ess = nf / (1.0 + 2.0 * sum_rho);
    ess.clamp(f64::MIN_POSITIVE, nf)
}

fn sample_covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let n = samples.len();
    let dim = samples[0].len();
    let mut mean = DVector::zeros(dim);
    for s in samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in samples {
        let d = DVector::from_column_slice(s) - &mean;
        cov += &d * d.transpose();
    }
    cov / (n as f64 - 1.0)
}

/// Batch-means estimate of the long-run covariance with batch size ⌊√n⌋.
fn batch_means_covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let n = samples.len();
    let dim = samples[0].len();
    let b = (n as f64).sqrt().floor() as usize;
    let a = n / b;
    let used = a * b;
    let mut grand = DVector::zeros(dim);
    for s in &samples[..used] {
        grand += DVector::from_column_slice(s);
    }
    grand /= used as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for i in 0..a {
        let mut bm = DVector::zeros(dim);
        for s in &samples[i * b..(i + 1) * b] {
            bm += DVector::from_column_slice(s);
        }
        bm /= b as f64;
        let d = bm - &grand;
        cov += &d * d.transpose();
    }
    cov * (b as f64 / (a as f64 - 1.0))
}

/// Multivariate ESS `n·(det Λ / det Σ_mc)^{1/S}`. Falls back to the minimum
/// per-dimension univariate ESS when either covariance is singular.
pub fn ess_multivariate(samples: &[Vec<f64>]) -> Result<f64> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    let dim = samples[0].len();
    if n <= dim {
        return Err(Error::InvalidParameter(format!(
            "need more samples ({n}) than dimensions ({dim})"
        )));
    }
    let lambda = sample_covariance(samples);
    let sigma_mc = batch_means_covariance(samples);
    let det_l = lambda.determinant();
    let det_m = sigma_mc.determinant();
    if !(det_l > 0.0) || !(det_m > 0.0) {
        // singular covariance: fall back to the weakest dimension
        let min_ess = (0..dim)
            .map(|d| {
                let series: Vec<f64> = samples.iter().map(|s| s[d]).collect();
                ess_univariate(&series)
            })
            .fold(f64::INFINITY, f64::min);
        return Ok(min_ess);
    }
    let ess = n as f64 * (det_l / det_m).powf(1.0 / dim as f64);
    Ok(ess.clamp(f64::MIN_POSITIVE, n as f64))
}

/// Method-of-moments inverse-gamma fit:
/// shape = mean²/var + 2, rate = mean·(shape − 1).
pub fn fit_inv_gamma(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two samples to fit".into(),
        ));
    }
    if samples.iter().any(|&x| x <= 0.0) {
        return Err(Error::Domain("inverse-gamma samples must be positive".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Err(Error::Domain("zero variance: fit undefined".into()));
    }
    let shape = mean * mean / var + 2.0;
    let rate = mean * (shape - 1.0);
    Ok((shape, rate))
}

/// Kendall τ-b of (index, value): −1 for a strictly decreasing series, +1
/// for strictly increasing, with tied values handled by the τ-b denominator.
/// Runs in O(n log n) via merge-sort inversion counting.
pub fn trend_stat(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    // discordant pairs = inversions (strictly decreasing pairs) in y over
    // the index order; ties contribute neither
    let mut work: Vec<f64> = series.to_vec();
    let mut buf = vec![0.0f64; n];
    let discordant = count_inversions(&mut work, &mut buf);
    // tie counts in y
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut n2 = 0u64; // Σ t(t−1)/2 over tie groups
    let mut run = 1u64;
    for i in 1..n {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            n2 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n2 += run * (run - 1) / 2;
    let n0 = n as u64 * (n as u64 - 1) / 2;
    let concordant = n0 - n2 - discordant;
    let num = concordant as f64 - discordant as f64;
    let den = ((n0 as f64) * (n0 - n2) as f64).sqrt();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Count strictly-decreasing pairs by merge sort. Equal elements are not
/// inversions.
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let mut inv = count_inversions(left, &mut buf[..mid]) + count_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0usize, 0usize, 0usize);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            // left[i] > right[j]: right[j] precedes all remaining left items
            inv += (left.len() - i) as u64;
            buf[k] = right[j];
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    inv
}
