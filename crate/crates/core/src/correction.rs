//! Exact short-record bias correction.
//!
//! Subtracting the estimated mean makes the expectation of each covariance
//! estimate a linear combination of the true covariances on the window:
//! `<C> = A gamma`. With `D` the total weight and `W_k` the pair weights,
//!
//! ```text
//! a_kj = delta_kj + W_j / D^2 - (G_kj + H_kj) / (D W_k)
//! G_kj = sum_i w_i w_{i+j} w_{i+k}
//! H_kj = sum_i w_i w_{i+j} w_{i+j-k}
//! ```
//!
//! and for a cross estimate with totals `D_x`, `D_y`
//!
//! ```text
//! a_kj = delta_kj + W_j / (D_x D_y) - G_kj / (D_y W_k) - H_kj / (D_x W_k)
//! G_kj = sum_i wx_i wy_{i+j} wy_{i+k}
//! H_kj = sum_i wx_i wy_{i+j} wx_{i+j-k}
//! ```
//!
//! Solving `A C_hat = C` removes the bias, provided the true covariance
//! vanishes outside the window. The matrix is singular for the full lag
//! range, so windows must stay strictly inside it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::covariance::lagged_dot;
use crate::error::{Error, Result};
use crate::fft;
use crate::linalg::Solver;
use crate::types::{validate_weights, CovarianceEstimate, EstimateKind, Fingerprint, LagWindow, MappingMatrix};

/// Default `K * N` above which the triple sums are assembled with FFTs.
pub const DEFAULT_FFT_CROSSOVER: usize = 1 << 20;

/// Default condition number beyond which a mapping matrix counts as singular.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e12;

/// The triple-product sums `G` and `H` over a lag window, rows `k`,
/// columns `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleAccumulators {
    pub window: LagWindow,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembly {
    /// Direct sums when `K * N` is below the crossover, FFTs above.
    Auto {
        crossover: usize,
    },
    Direct,
    Fft,
}

impl Default for Assembly {
    fn default() -> Self {
        Assembly::Auto {
            crossover: DEFAULT_FFT_CROSSOVER,
        }
    }
}

impl Assembly {
    fn use_fft(self, k: usize, n: usize) -> bool {
        match self {
            Assembly::Auto { crossover } => k.saturating_mul(n) > crossover,
            Assembly::Direct => false,
            Assembly::Fft => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionOptions {
    pub condition_threshold: f64,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self {
            condition_threshold: DEFAULT_CONDITION_THRESHOLD,
        }
    }
}

/// A corrected estimate together with the condition estimate of the system
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub estimate: CovarianceEstimate,
    pub condition: f64,
}

/// `sum_i a_i b_{i+p} c_{i+q}` over indices where all three exist.
#[inline]
fn triple(a: &[f64], b: &[f64], c: &[f64], p: i64, q: i64) -> f64 {
    let lo = 0.max(-p).max(-q);
    let hi = (a.len() as i64).min(b.len() as i64 - p).min(c.len() as i64 - q);
    if hi <= lo {
        return 0.0;
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let (bp, cq) = ((lo as i64 + p) as usize, (lo as i64 + q) as usize);
    let len = hi - lo;
    a[lo..hi]
        .iter()
        .zip(&b[bp..bp + len])
        .zip(&c[cq..cq + len])
        .map(|((x, y), z)| x * y * z)
        .sum()
}

/// `out_i = base_i * other_{i+shift}`, zero where `other` is undefined.
fn shifted_product(base: &[f64], other: &[f64], shift: i64) -> Vec<f64> {
    base.iter()
        .enumerate()
        .map(|(i, &b)| {
            let j = i as i64 + shift;
            if j >= 0 && (j as usize) < other.len() {
                b * other[j as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn is_binary(w: &[f64]) -> bool {
    w.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Both `G` and `H` are symmetric in `(k, j)` (swap the two shifted factors),
/// so only `j >= k` is summed.
fn symmetric_direct(window: LagWindow, entry: impl Fn(i64, i64) -> f64 + Sync) -> DMatrix<f64> {
    let lags: Vec<i64> = window.lags().collect();
    let rows: Vec<Vec<f64>> = lags
        .par_iter()
        .enumerate()
        .map(|(r, &k)| lags[r..].iter().map(|&j| entry(k, j)).collect())
        .collect();
    let kk = lags.len();
    let mut m = DMatrix::zeros(kk, kk);
    for (r, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            m[(r, r + off)] = v;
            m[(r + off, r)] = v;
        }
    }
    m
}

fn rows_from_records(window: LagWindow, binary: bool, row: impl Fn(i64) -> Vec<f64> + Sync) -> DMatrix<f64> {
    let lags: Vec<i64> = window.lags().collect();
    let records: Vec<Vec<f64>> = lags.par_iter().map(|&k| row(k)).collect();
    let kk = lags.len();
    DMatrix::from_fn(kk, kk, |r, c| {
        let v = fft::at_lag(&records[r], lags[c]);
        if binary {
            v.round()
        } else {
            v
        }
    })
}

/// `G` and `H` for a single weight sequence by direct triple sums.
pub fn auto_triples_direct(weights: &[f64], window: LagWindow) -> TripleAccumulators {
    let w = weights;
    TripleAccumulators {
        window,
        g: symmetric_direct(window, |k, j| triple(w, w, w, j, k)),
        h: symmetric_direct(window, |k, j| triple(w, w, w, j, j - k)),
    }
}

/// `G` and `H` row by row from zero-padded FFTs of length `2N`:
/// row `k` of `G` is the correlation of `w * w_{+k}` with `w`, row `k` of
/// `H` the correlation of `w` with `w * w_{-k}`.
pub fn auto_triples_fft(weights: &[f64], window: LagWindow) -> TripleAccumulators {
    let len = 2 * weights.len();
    let spec_w = fft::padded_spectrum(weights, len);
    let binary = is_binary(weights);
    TripleAccumulators {
        window,
        g: rows_from_records(window, binary, |k| {
            let u = fft::padded_spectrum(&shifted_product(weights, weights, k), len);
            fft::cross_correlate_spectra(&u, &spec_w)
        }),
        h: rows_from_records(window, binary, |k| {
            let v = fft::padded_spectrum(&shifted_product(weights, weights, -k), len);
            fft::cross_correlate_spectra(&spec_w, &v)
        }),
    }
}

pub fn cross_triples_direct(wx: &[f64], wy: &[f64], window: LagWindow) -> TripleAccumulators {
    TripleAccumulators {
        window,
        g: symmetric_direct(window, |k, j| triple(wx, wy, wy, j, k)),
        h: symmetric_direct(window, |k, j| triple(wx, wy, wx, j, j - k)),
    }
}

/// Cross version of [`auto_triples_fft`] with records of length `N_x + N_y`.
pub fn cross_triples_fft(wx: &[f64], wy: &[f64], window: LagWindow) -> TripleAccumulators {
    let len = wx.len() + wy.len();
    let spec_x = fft::padded_spectrum(wx, len);
    let spec_y = fft::padded_spectrum(wy, len);
    let binary = is_binary(wx) && is_binary(wy);
    TripleAccumulators {
        window,
        g: rows_from_records(window, binary, |k| {
            let u = fft::padded_spectrum(&shifted_product(wx, wy, k), len);
            fft::cross_correlate_spectra(&u, &spec_y)
        }),
        h: rows_from_records(window, binary, |k| {
            let v = fft::padded_spectrum(&shifted_product(wy, wx, -k), len);
            fft::cross_correlate_spectra(&spec_x, &v)
        }),
    }
}

fn window_pair_weights(wx: &[f64], wy: &[f64], window: LagWindow) -> Result<Vec<f64>> {
    let counts: Vec<f64> = window.lags().map(|k| lagged_dot(wx, wy, k)).collect();
    let holes: Vec<i64> = window
        .lags()
        .zip(&counts)
        .filter(|(_, &c)| c.is_nan() || c <= 0.0)
        .map(|(k, _)| k)
        .collect();
    if !holes.is_empty() {
        return Err(Error::InsufficientPairCoverage { lags: holes });
    }
    Ok(counts)
}

/// Mapping matrix of the autocovariance estimator for `weights` on `window`
/// with the default assembly policy.
pub fn build_auto_matrix(weights: &[f64], window: LagWindow) -> Result<MappingMatrix> {
    build_auto_matrix_with(weights, window, Assembly::default())
}

pub fn build_auto_matrix_with(weights: &[f64], window: LagWindow, assembly: Assembly) -> Result<MappingMatrix> {
    validate_weights(weights)?;
    let n = weights.len();
    window.check_auto_correctable(n)?;
    let pair = window_pair_weights(weights, weights, window)?;
    let d: f64 = weights.iter().sum();
    let t = if assembly.use_fft(window.len(), n) {
        auto_triples_fft(weights, window)
    } else {
        auto_triples_direct(weights, window)
    };
    let kk = window.len();
    let entries = DMatrix::from_fn(kk, kk, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta + pair[c] / (d * d) - (t.g[(r, c)] + t.h[(r, c)]) / (d * pair[r])
    });
    Ok(MappingMatrix::new(
        entries,
        window,
        Fingerprint::of_weights(weights),
        EstimateKind::Auto,
    ))
}

/// Mapping matrix of the cross-covariance estimator (`x` leading).
pub fn build_cross_matrix(wx: &[f64], wy: &[f64], window: LagWindow) -> Result<MappingMatrix> {
    build_cross_matrix_with(wx, wy, window, Assembly::default())
}

pub fn build_cross_matrix_with(wx: &[f64], wy: &[f64], window: LagWindow, assembly: Assembly) -> Result<MappingMatrix> {
    validate_weights(wx)?;
    validate_weights(wy)?;
    window.check_correctable(wx.len(), wy.len())?;
    let pair = window_pair_weights(wx, wy, window)?;
    let dx: f64 = wx.iter().sum();
    let dy: f64 = wy.iter().sum();
    let t = if assembly.use_fft(window.len(), wx.len().max(wy.len())) {
        cross_triples_fft(wx, wy, window)
    } else {
        cross_triples_direct(wx, wy, window)
    };
    let kk = window.len();
    let entries = DMatrix::from_fn(kk, kk, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta + pair[c] / (dx * dy) - t.g[(r, c)] / (dy * pair[r]) - t.h[(r, c)] / (dx * pair[r])
    });
    Ok(MappingMatrix::new(
        entries,
        window,
        Fingerprint::of_pair(wx, wy),
        EstimateKind::Cross,
    ))
}

/// Solves `A C_hat = C` for the bias-free estimate.
pub fn correct_covariance(
    raw: &CovarianceEstimate,
    matrix: &MappingMatrix,
    options: &CorrectionOptions,
) -> Result<Corrected> {
    if raw.window() != matrix.window() {
        return Err(Error::WindowMismatch {
            expected: matrix.window(),
            actual: raw.window(),
        });
    }
    if raw.kind() != matrix.kind() {
        return Err(Error::KindMismatch);
    }
    if raw.fingerprint() != matrix.fingerprint() {
        return Err(Error::FingerprintMismatch);
    }
    let solver = Solver::new(matrix.entries());
    let (values, condition) = solver.solve_checked(raw.values(), options.condition_threshold)?;
    Ok(Corrected {
        estimate: raw.with_values(values, true),
        condition,
    })
}

/// Expected raw estimate `A gamma` for a hypothetical covariance on the
/// matrix window.
pub fn predict_expected_covariance(matrix: &MappingMatrix, gamma: &[f64]) -> Result<Vec<f64>> {
    let k = matrix.window().len();
    if gamma.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: gamma.len(),
        });
    }
    let a = matrix.entries();
    Ok((0..k).map(|r| (0..k).map(|c| a[(r, c)] * gamma[c]).sum()).collect())
}

/// `out_i = sum_{m in window} gamma_m v_{i+m}` for `i` in `0..len`
/// (correlation of the window values with a sequence).
fn forward_weighted(window: LagWindow, gamma: &[f64], v: &[f64], len: usize) -> Vec<f64> {
    (0..len as i64)
        .map(|i| {
            window
                .lags()
                .zip(gamma)
                .filter_map(|(m, g)| {
                    let j = i + m;
                    (j >= 0 && (j as usize) < v.len()).then(|| g * v[j as usize])
                })
                .sum()
        })
        .collect()
}

/// `out_m = sum_j v_j gamma_{m-j}` for `m` in `0..len` (convolution).
fn backward_weighted(window: LagWindow, gamma: &[f64], v: &[f64], len: usize) -> Vec<f64> {
    (0..len as i64)
        .map(|m| {
            window
                .lags()
                .zip(gamma)
                .filter_map(|(l, g)| {
                    let j = m - l;
                    (j >= 0 && (j as usize) < v.len()).then(|| g * v[j as usize])
                })
                .sum()
        })
        .collect()
}

/// Expected raw autocovariance `gamma_k + eps_k` evaluated from the bias
/// expression (variance of the mean minus the pair-weighted mixed terms),
/// without assembling a matrix. `gamma` lives on `window` and is zero
/// outside it.
pub fn expected_auto_covariance(weights: &[f64], window: LagWindow, gamma: &[f64]) -> Result<Vec<f64>> {
    validate_weights(weights)?;
    if gamma.len() != window.len() {
        return Err(Error::DimensionMismatch {
            expected: window.len(),
            actual: gamma.len(),
        });
    }
    let n = weights.len();
    let pair = window_pair_weights(weights, weights, window)?;
    let d: f64 = weights.iter().sum();
    // g_i = sum_j w_j gamma_{j-i},  h_m = sum_j w_j gamma_{m-j}
    let g = forward_weighted(window, gamma, weights, n);
    let h = backward_weighted(window, gamma, weights, n);
    let mean_var = weights.iter().zip(&g).map(|(w, g)| w * g).sum::<f64>() / (d * d);
    Ok(window
        .lags()
        .zip(&pair)
        .zip(gamma)
        .map(|((k, &wk), &gk)| {
            let mixed: f64 = (0..n as i64)
                .filter(|&i| i + k >= 0 && i + k < n as i64)
                .map(|i| {
                    let (i, ik) = (i as usize, (i + k) as usize);
                    weights[i] * weights[ik] * (g[i] + h[ik])
                })
                .sum();
            gk + mean_var - mixed / (d * wk)
        })
        .collect())
}

/// Cross version of [`expected_auto_covariance`].
pub fn expected_cross_covariance(wx: &[f64], wy: &[f64], window: LagWindow, gamma: &[f64]) -> Result<Vec<f64>> {
    validate_weights(wx)?;
    validate_weights(wy)?;
    if gamma.len() != window.len() {
        return Err(Error::DimensionMismatch {
            expected: window.len(),
            actual: gamma.len(),
        });
    }
    let (nx, ny) = (wx.len(), wy.len());
    let pair = window_pair_weights(wx, wy, window)?;
    let dx: f64 = wx.iter().sum();
    let dy: f64 = wy.iter().sum();
    // gy_i = sum_j wy_j gamma_{j-i} (i over x),  hx_m = sum_j wx_j gamma_{m-j} (m over y)
    let gy = forward_weighted(window, gamma, wy, nx);
    let hx = backward_weighted(window, gamma, wx, ny);
    let mean_cov = wx.iter().zip(&gy).map(|(w, g)| w * g).sum::<f64>() / (dx * dy);
    Ok(window
        .lags()
        .zip(&pair)
        .zip(gamma)
        .map(|((k, &wk), &gk)| {
            let (mut sy, mut sx) = (0.0, 0.0);
            for i in 0..nx as i64 {
                let ik = i + k;
                if ik < 0 || ik >= ny as i64 {
                    continue;
                }
                let (i, ik) = (i as usize, ik as usize);
                let p = wx[i] * wy[ik];
                sy += p * gy[i];
                sx += p * hx[ik];
            }
            gk + mean_cov - sy / (dy * wk) - sx / (dx * wk)
        })
        .collect())
}

/// Gamma vector on `window` read from a closure.
pub fn gamma_on(window: LagWindow, f: impl Fn(i64) -> f64) -> Vec<f64> {
    window.lags().map(f).collect()
}
