//! Wiener-Khinchin transform of a truncated covariance window into a power
//! spectral density, and its inverse.
//!
//! `S_j = dt * sum_k C_k exp(-2 pi i f_j k dt)` at `f_j = j / (K dt)` for
//! `j = -floor(K/2) ..= floor((K-1)/2)`. No taper is applied.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::types::{CovarianceEstimate, EstimateKind, Fingerprint, LagWindow, SpectrumEstimate};

fn frequency_indices(k: usize) -> impl Iterator<Item = i64> {
    let k = k as i64;
    -(k / 2)..=(k - 1) / 2
}

/// Length-`K` DFT of the window-ordered values with a per-frequency phase
/// factor `exp(-2 pi i j k1 / K)` accounting for the first lag. For a
/// centred auto window this is the usual index rotation.
pub fn covariance_to_spectrum(cov: &CovarianceEstimate) -> SpectrumEstimate {
    let window = cov.window();
    let k = window.len();
    let dt = cov.dt();
    let mut buf: Vec<Complex64> = cov.values().iter().map(|&c| Complex64::new(c, 0.0)).collect();
    fft::forward(k).process(&mut buf);
    let values = frequency_indices(k)
        .map(|j| {
            let phase = Complex64::from_polar(
                1.0,
                -2.0 * PI * ((j * window.k1()).rem_euclid(k as i64)) as f64 / k as f64,
            );
            buf[j.rem_euclid(k as i64) as usize] * phase * dt
        })
        .collect();
    SpectrumEstimate {
        window,
        dt,
        frequencies: SpectrumEstimate::frequency_grid(k, dt),
        values,
        kind: cov.kind(),
        corrected: cov.is_corrected(),
        pair_weights: cov.pair_weights().to_vec(),
        fingerprint: cov.fingerprint(),
    }
}

/// Complex lag-domain values recovered from a spectrum on its own window.
pub fn inverse_transform(spec: &SpectrumEstimate) -> Vec<Complex64> {
    let window = spec.window();
    let k = window.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for (j, s) in frequency_indices(k).zip(spec.values()) {
        let phase = Complex64::from_polar(
            1.0,
            2.0 * PI * ((j * window.k1()).rem_euclid(k as i64)) as f64 / k as f64,
        );
        buf[j.rem_euclid(k as i64) as usize] = s * phase;
    }
    fft::inverse(k).process(&mut buf);
    let scale = 1.0 / (k as f64 * spec.dt());
    buf.into_iter().map(|c| c * scale).collect()
}

/// Inverse of [`covariance_to_spectrum`]; keeps the real part.
pub fn spectrum_to_covariance(spec: &SpectrumEstimate) -> Result<CovarianceEstimate> {
    let values = inverse_transform(spec).into_iter().map(|c| c.re).collect();
    let cov = CovarianceEstimate::new(
        spec.window(),
        values,
        spec.pair_weights().to_vec(),
        spec.dt(),
        spec.kind(),
        spec.fingerprint(),
    )?;
    Ok(if spec.is_corrected() {
        cov.with_values(cov.values().to_vec(), true)
    } else {
        cov
    })
}

/// Spectrum from explicit values on the grid of `window`. Pair weights are
/// set to one, which marks the result as synthetic.
pub fn spectrum_from_values(
    window: LagWindow,
    dt: f64,
    kind: EstimateKind,
    values: Vec<Complex64>,
) -> Result<SpectrumEstimate> {
    if values.len() != window.len() {
        return Err(Error::DimensionMismatch {
            expected: window.len(),
            actual: values.len(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NonPositiveDt(dt));
    }
    Ok(SpectrumEstimate {
        window,
        dt,
        frequencies: SpectrumEstimate::frequency_grid(window.len(), dt),
        values,
        kind,
        corrected: false,
        pair_weights: vec![1.0; window.len()],
        fingerprint: Fingerprint::of_weights(&[]),
    })
}

/// Direct evaluation of the transform sum, `O(K^2)`.
pub fn covariance_to_spectrum_direct(window: LagWindow, values: &[f64], dt: f64) -> Vec<Complex64> {
    let k = window.len() as f64;
    frequency_indices(window.len())
        .map(|j| {
            let f = j as f64 / (k * dt);
            window
                .lags()
                .zip(values)
                .map(|(lag, &c)| Complex64::from_polar(c, -2.0 * PI * f * lag as f64 * dt))
                .sum::<Complex64>()
                * dt
        })
        .collect()
}
