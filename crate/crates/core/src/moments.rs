//! Weighted mean and variance over valid samples, the variance of the mean
//! estimator and the corrected variance.

use crate::covariance::pair_counts_all;
use crate::error::{Error, Result};
use crate::types::{CovarianceEstimate, EstimateKind, GappySeries, LagWindow, MomentSummary};

/// `sum(w z) / sum(w)` over samples with positive weight.
pub fn weighted_mean(series: &GappySeries) -> f64 {
    weighted_mean_of(series.values(), series.weights())
}

pub(crate) fn weighted_mean_of(values: &[f64], weights: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut total = 0.0;
    for (&z, &w) in values.iter().zip(weights) {
        if w > 0.0 {
            sum += w * z;
            total += w;
        }
    }
    sum / total
}

/// `s^2 = sum(w (z - mean)^2) / sum(w)`.
pub fn weighted_variance(series: &GappySeries) -> f64 {
    let mean = weighted_mean(series);
    let mut sum = 0.0;
    let mut total = 0.0;
    for (&z, &w) in series.values().iter().zip(series.weights()) {
        if w > 0.0 {
            let d = z - mean;
            sum += w * d * d;
            total += w;
        }
    }
    sum / total
}

/// Variance of the weighted mean for a covariance function `gamma` given on
/// `window`:
///
/// `var = sum_i sum_j w_i w_j gamma_{j-i} / D^2 = sum_k W_k gamma_k / D^2`.
///
/// Lags outside the window are zero only if `truncate` is set; otherwise a
/// window not covering every lag that has valid pairs is an error.
pub fn mean_estimator_variance(weights: &[f64], window: LagWindow, gamma: &[f64], truncate: bool) -> Result<f64> {
    crate::types::validate_weights(weights)?;
    if gamma.len() != window.len() {
        return Err(Error::DimensionMismatch {
            expected: window.len(),
            actual: gamma.len(),
        });
    }
    let n = weights.len() as i64;
    let counts = pair_counts_all(weights);
    if !truncate {
        let lags_with_pairs = (-(n - 1)..n).filter(|&k| counts[(k + n - 1) as usize] > 0.0);
        let (min, max) = lags_with_pairs.fold((i64::MAX, i64::MIN), |(lo, hi), k| (lo.min(k), hi.max(k)));
        if min < window.k1() || max > window.k2() {
            return Err(Error::WindowTooNarrow { window, min, max });
        }
    }
    let d: f64 = weights.iter().sum();
    let sum: f64 = window
        .lags()
        .zip(gamma)
        .filter(|(k, _)| k.abs() < n)
        .map(|(k, g)| counts[(k + n - 1) as usize] * g)
        .sum();
    Ok(sum / (d * d))
}

/// Corrected variance `s^2 + var(mean)`, with the variance of the mean
/// evaluated from the bias-corrected autocovariance of the same series
/// (treated as zero outside its window).
pub fn corrected_variance(series: &GappySeries, corrected_cov: &CovarianceEstimate) -> Result<MomentSummary> {
    if corrected_cov.kind() != EstimateKind::Auto {
        return Err(Error::KindMismatch);
    }
    if corrected_cov.fingerprint() != series.fingerprint() {
        return Err(Error::FingerprintMismatch);
    }
    let mean = weighted_mean(series);
    let raw_variance = weighted_variance(series);
    let mean_var = mean_estimator_variance(series.weights(), corrected_cov.window(), corrected_cov.values(), true)?;
    Ok(MomentSummary {
        mean,
        raw_variance,
        mean_estimator_variance: mean_var,
        corrected_variance: raw_variance + mean_var,
        total_weight: series.total_weight(),
    })
}
