//! Comparison estimators: the Lomb-Scargle periodogram over valid samples
//! (with the constant offset correction for independently missing samples)
//! and sample-and-hold interpolation followed by the gap-free pipeline.
//!
//! Neither is bias-free under gaps. They are here to be compared against.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::covariance::{autocovariance_fft, crosscovariance_fft};
use crate::error::{Error, Result};
use crate::moments::weighted_mean;
use crate::spectrum::covariance_to_spectrum;
use crate::types::{CovarianceEstimate, EstimateKind, GappySeries, LagWindow, SpectrumEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct LombScargleSpectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub offset_corrected: bool,
    /// Probability of a sample being valid; the estimate `D / N` until an
    /// explicit value is supplied to the offset correction.
    pub alpha_prime: f64,
}

/// Relative size below which one quadrature of the sinusoid fit is treated
/// as absent (e.g. the sine term at the Nyquist frequency).
const DEGENERATE_QUADRATURE: f64 = 1e-10;

/// Time-shifted, mean-subtracted Lomb-Scargle periodogram over the valid
/// samples, in power spectral density units.
///
/// The classical power `P = (A^2 / C + B^2 / S) / 2` is scaled by
/// `dt * N / D`, so that a gap-free series reproduces the periodogram
/// `dt |DFT(z - mean)|^2 / N` and the contribution of the correlated part of
/// a gappy signal keeps its level. If one quadrature degenerates, the other
/// one alone carries the full fit.
pub fn lomb_scargle(series: &GappySeries, frequencies: &[f64]) -> Result<LombScargleSpectrum> {
    let found = series.valid_count();
    if found < 2 {
        return Err(Error::TooFewValidSamples { needed: 2, found });
    }
    if let Some(&f) = frequencies.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(Error::InvalidFrequency(f));
    }
    let mean = weighted_mean(series);
    let dt = series.dt();
    let valid: Vec<(f64, f64, f64)> = series
        .values()
        .iter()
        .zip(series.weights())
        .enumerate()
        .filter(|(_, (_, &w))| w > 0.0)
        .map(|(i, (&z, &w))| (i as f64 * dt, z - mean, w))
        .collect();
    let d = series.total_weight();
    let scale = dt * series.len() as f64 / d;

    let values = frequencies
        .iter()
        .map(|&f| {
            let omega = 2.0 * PI * f;
            let (s2, c2) = valid.iter().fold((0.0, 0.0), |(s, c), &(t, _, w)| {
                let (sn, cs) = (2.0 * omega * t).sin_cos();
                (s + w * sn, c + w * cs)
            });
            let tau = s2.atan2(c2) / (2.0 * omega);
            let (mut a, mut b, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for &(t, x, w) in &valid {
                let (sn, cs) = (omega * (t - tau)).sin_cos();
                a += w * x * cs;
                b += w * x * sn;
                cc += w * cs * cs;
                ss += w * sn * sn;
            }
            let cos_ok = cc > DEGENERATE_QUADRATURE * d;
            let sin_ok = ss > DEGENERATE_QUADRATURE * d;
            let power = match (cos_ok, sin_ok) {
                (true, true) => 0.5 * (a * a / cc + b * b / ss),
                (true, false) => a * a / cc,
                (false, true) => b * b / ss,
                (false, false) => 0.0,
            };
            scale * power
        })
        .collect();

    Ok(LombScargleSpectrum {
        frequencies: frequencies.to_vec(),
        values,
        offset_corrected: false,
        alpha_prime: d / series.len() as f64,
    })
}

/// Subtracts the constant `(dt / D) (1/alpha' - 1) sum w (z - mean)^2` from
/// every bin. Only meaningful when samples are missing independently.
///
/// `alpha_prime` defaults to the `D / N` recorded in `spec`.
pub fn lomb_scargle_offset_correct(
    spec: &LombScargleSpectrum,
    series: &GappySeries,
    alpha_prime: Option<f64>,
) -> Result<LombScargleSpectrum> {
    if spec.offset_corrected {
        return Err(Error::AlreadyCorrected);
    }
    let alpha = alpha_prime.unwrap_or(spec.alpha_prime);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let offset = lomb_scargle_offset(series, alpha);
    Ok(LombScargleSpectrum {
        frequencies: spec.frequencies.clone(),
        values: spec.values.iter().map(|v| v - offset).collect(),
        offset_corrected: true,
        alpha_prime: alpha,
    })
}

/// The constant removed by [`lomb_scargle_offset_correct`].
pub fn lomb_scargle_offset(series: &GappySeries, alpha_prime: f64) -> f64 {
    let mean = weighted_mean(series);
    let sum: f64 = series
        .values()
        .iter()
        .zip(series.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&z, &w)| w * (z - mean) * (z - mean))
        .sum();
    series.dt() / series.total_weight() * (1.0 / alpha_prime - 1.0) * sum
}

/// Lomb-Scargle autospectrum on the Wiener-Khinchin grid of `window`, as a
/// [`SpectrumEstimate`] (real values). The periodogram is even in
/// frequency; the zero bin holds the mean-subtracted periodogram at zero
/// frequency, which vanishes identically.
pub fn lomb_scargle_grid(
    series: &GappySeries,
    window: LagWindow,
    offset_alpha: Option<Option<f64>>,
) -> Result<SpectrumEstimate> {
    let grid = SpectrumEstimate::frequency_grid(window.len(), series.dt());
    let positive: Vec<f64> = grid.iter().filter(|f| **f != 0.0).map(|f| f.abs()).collect();
    let mut ls = lomb_scargle(series, &positive)?;
    if let Some(alpha) = offset_alpha {
        ls = lomb_scargle_offset_correct(&ls, series, alpha)?;
    }
    let mut it = ls.values.into_iter();
    let values: Vec<Complex64> = grid
        .iter()
        .map(|&f| Complex64::new(if f == 0.0 { 0.0 } else { it.next().unwrap_or(0.0) }, 0.0))
        .collect();
    let mut spec = crate::spectrum::spectrum_from_values(window, series.dt(), EstimateKind::Auto, values)?;
    spec.fingerprint = series.fingerprint();
    Ok(spec)
}

/// Replaces every invalid sample by the most recent valid value; leading
/// invalid samples take the first valid value. The result is fully valid.
pub fn sample_and_hold(series: &GappySeries) -> Result<GappySeries> {
    let first = series
        .weights()
        .iter()
        .position(|&w| w > 0.0)
        .ok_or(Error::AllInvalid)?;
    let mut held = series.values()[first];
    let values = series
        .values()
        .iter()
        .zip(series.weights())
        .map(|(&z, &w)| {
            if w > 0.0 {
                held = z;
            }
            held
        })
        .collect();
    GappySeries::fully_valid(values, series.dt())
}

/// Sample-and-hold, then the gap-free covariance and spectrum pipeline.
pub fn interpolated_covariance_spectrum(
    series: &GappySeries,
    window: LagWindow,
) -> Result<(CovarianceEstimate, SpectrumEstimate)> {
    let held = sample_and_hold(series)?;
    let cov = autocovariance_fft(&held, window)?;
    let spec = covariance_to_spectrum(&cov);
    Ok((cov, spec))
}

pub fn interpolated_cross_spectrum(
    x: &GappySeries,
    y: &GappySeries,
    window: LagWindow,
) -> Result<(CovarianceEstimate, SpectrumEstimate)> {
    let hx = sample_and_hold(x)?;
    let hy = sample_and_hold(y)?;
    let cov = crosscovariance_fft(&hx, &hy, window)?;
    let spec = covariance_to_spectrum(&cov);
    Ok((cov, spec))
}
