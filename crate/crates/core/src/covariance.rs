//! Empirical auto- and cross-covariance of gappy series.
//!
//! Only pairs of valid samples enter the averages: lag `k` is estimated as
//! `C_k = Z_k / W_k` where `Z_k` sums the products of mean-subtracted values
//! over valid pairs and `W_k` sums the pair weights. Both a direct `O(N K)`
//! route and a zero-padded FFT route are provided; they agree to rounding.

use crate::error::{Error, Result};
use crate::fft;
use crate::moments::weighted_mean_of;
use crate::types::{CovarianceEstimate, EstimateKind, Fingerprint, GappySeries, LagWindow};

/// Raw sums over valid pairs before normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAccumulators {
    pub window: LagWindow,
    /// Weighted products of mean-subtracted values, `Z_k`.
    pub products: Vec<f64>,
    /// Pair weights, `W_k`.
    pub weights: Vec<f64>,
}

impl PairAccumulators {
    fn into_estimate(self, dt: f64, kind: EstimateKind, fingerprint: Fingerprint) -> Result<CovarianceEstimate> {
        let values = self.products.iter().zip(&self.weights).map(|(z, w)| z / w).collect();
        CovarianceEstimate::new(self.window, values, self.weights, dt, kind, fingerprint)
    }
}

/// `w_i (z_i - mean)` with exact zeros at invalid positions, so whatever is
/// stored there never reaches an estimate.
pub(crate) fn masked_deviations(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mean = weighted_mean_of(values, weights);
    values
        .iter()
        .zip(weights)
        .map(|(&z, &w)| if w > 0.0 { w * (z - mean) } else { 0.0 })
        .collect()
}

/// `sum_i a_i b_{i+k}` over the overlap of the two supports.
#[inline]
pub(crate) fn lagged_dot(a: &[f64], b: &[f64], k: i64) -> f64 {
    let (a, b) = if k >= 0 {
        let k = k as usize;
        if k >= b.len() {
            return 0.0;
        }
        (a, &b[k..])
    } else {
        let k = k.unsigned_abs() as usize;
        if k >= a.len() {
            return 0.0;
        }
        (&a[k..], b)
    };
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pair weights of a single weight sequence at every lag `-(N-1) ..= N-1`,
/// stored at index `k + N - 1`.
pub fn pair_counts_all(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let len = 2 * n;
    let record = fft::auto_correlate_spectrum(&fft::padded_spectrum(weights, len));
    let binary = weights.iter().all(|&w| w == 0.0 || w == 1.0);
    let scale: f64 = weights.iter().map(|w| w * w).sum();
    (-(n as i64 - 1)..n as i64)
        .map(|k| clean_pair_weight(fft::at_lag(&record, k), binary, scale))
        .collect()
}

/// FFT pair weights carry rounding noise; integer counts are restored for
/// binary weights and sub-noise values become exact zeros otherwise.
fn clean_pair_weight(w: f64, binary: bool, scale: f64) -> f64 {
    if binary {
        w.round()
    } else if w <= 1e-10 * scale {
        0.0
    } else {
        w
    }
}

pub fn auto_accumulators_direct(series: &GappySeries, window: LagWindow) -> PairAccumulators {
    let dev = masked_deviations(series.values(), series.weights());
    let w = series.weights();
    PairAccumulators {
        window,
        products: window.lags().map(|k| lagged_dot(&dev, &dev, k)).collect(),
        weights: window.lags().map(|k| lagged_dot(w, w, k)).collect(),
    }
}

pub fn auto_accumulators_fft(series: &GappySeries, window: LagWindow) -> PairAccumulators {
    let n = series.len();
    let len = 2 * n;
    let dev = masked_deviations(series.values(), series.weights());
    let z = fft::auto_correlate_spectrum(&fft::padded_spectrum(&dev, len));
    let w = fft::auto_correlate_spectrum(&fft::padded_spectrum(series.weights(), len));
    let binary = series.is_binary();
    let scale: f64 = series.weights().iter().map(|w| w * w).sum();
    let in_range = |k: i64| k.unsigned_abs() < n as u64;
    PairAccumulators {
        window,
        products: window
            .lags()
            .map(|k| if in_range(k) { fft::at_lag(&z, k) } else { 0.0 })
            .collect(),
        weights: window
            .lags()
            .map(|k| {
                if in_range(k) {
                    clean_pair_weight(fft::at_lag(&w, k), binary, scale)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

/// Autocovariance by direct summation over valid pairs.
///
/// Fails with [`Error::WindowOutOfRange`] for lags beyond the record and
/// with [`Error::InsufficientPairCoverage`] naming every window lag without
/// a valid pair.
pub fn autocovariance_direct(series: &GappySeries, window: LagWindow) -> Result<CovarianceEstimate> {
    window.check_estimable(series.len(), series.len())?;
    auto_accumulators_direct(series, window).into_estimate(series.dt(), EstimateKind::Auto, series.fingerprint())
}

/// Autocovariance through zero-padded FFTs of length `2N`; same contract as
/// [`autocovariance_direct`].
pub fn autocovariance_fft(series: &GappySeries, window: LagWindow) -> Result<CovarianceEstimate> {
    window.check_estimable(series.len(), series.len())?;
    auto_accumulators_fft(series, window).into_estimate(series.dt(), EstimateKind::Auto, series.fingerprint())
}

fn check_pair(x: &GappySeries, y: &GappySeries, window: LagWindow) -> Result<()> {
    if x.dt() != y.dt() {
        return Err(Error::DtMismatch(x.dt(), y.dt()));
    }
    window.check_estimable(x.len(), y.len())
}

pub fn cross_accumulators_direct(x: &GappySeries, y: &GappySeries, window: LagWindow) -> PairAccumulators {
    let dx = masked_deviations(x.values(), x.weights());
    let dy = masked_deviations(y.values(), y.weights());
    PairAccumulators {
        window,
        products: window.lags().map(|k| lagged_dot(&dx, &dy, k)).collect(),
        weights: window.lags().map(|k| lagged_dot(x.weights(), y.weights(), k)).collect(),
    }
}

pub fn cross_accumulators_fft(x: &GappySeries, y: &GappySeries, window: LagWindow) -> PairAccumulators {
    let (nx, ny) = (x.len() as i64, y.len() as i64);
    let len = x.len() + y.len();
    let dx = masked_deviations(x.values(), x.weights());
    let dy = masked_deviations(y.values(), y.weights());
    let z = fft::cross_correlate_spectra(&fft::padded_spectrum(&dx, len), &fft::padded_spectrum(&dy, len));
    let w = fft::cross_correlate_spectra(
        &fft::padded_spectrum(x.weights(), len),
        &fft::padded_spectrum(y.weights(), len),
    );
    let binary = x.is_binary() && y.is_binary();
    let sx: f64 = x.weights().iter().map(|w| w * w).sum();
    let sy: f64 = y.weights().iter().map(|w| w * w).sum();
    let scale = (sx * sy).sqrt();
    let in_range = |k: i64| k > -nx && k < ny;
    PairAccumulators {
        window,
        products: window
            .lags()
            .map(|k| if in_range(k) { fft::at_lag(&z, k) } else { 0.0 })
            .collect(),
        weights: window
            .lags()
            .map(|k| {
                if in_range(k) {
                    clean_pair_weight(fft::at_lag(&w, k), binary, scale)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

/// Cross-covariance `C_xy,k` (x leading, y at `i + k`) by direct summation.
pub fn crosscovariance_direct(x: &GappySeries, y: &GappySeries, window: LagWindow) -> Result<CovarianceEstimate> {
    check_pair(x, y, window)?;
    let fp = Fingerprint::of_pair(x.weights(), y.weights());
    cross_accumulators_direct(x, y, window).into_estimate(x.dt(), EstimateKind::Cross, fp)
}

/// Cross-covariance through FFTs of length `N_x + N_y`.
pub fn crosscovariance_fft(x: &GappySeries, y: &GappySeries, window: LagWindow) -> Result<CovarianceEstimate> {
    check_pair(x, y, window)?;
    let fp = Fingerprint::of_pair(x.weights(), y.weights());
    cross_accumulators_fft(x, y, window).into_estimate(x.dt(), EstimateKind::Cross, fp)
}
