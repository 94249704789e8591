//! Domain types shared by every estimator.
//!
//! Everything here is immutable after construction. Constructors validate
//! their invariants, so any value of these types that exists is well formed.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Equidistant samples with one non-negative validity weight per sample.
///
/// Sample `i` sits at time `i * dt`. Values at zero-weight positions are
/// never read by any estimator, so they may hold anything (including NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct GappySeries {
    values: Vec<f64>,
    weights: Vec<f64>,
    dt: f64,
}

impl GappySeries {
    /// Validates and wraps a series.
    ///
    /// Rejects length mismatches, negative or non-finite weights, an
    /// all-zero weight sequence, non-finite values at valid positions and
    /// a non-positive sampling interval.
    pub fn new(values: Vec<f64>, weights: Vec<f64>, dt: f64) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch {
                values: values.len(),
                weights: weights.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::NonPositiveDt(dt));
        }
        validate_weights(&weights)?;
        for (index, (&v, &w)) in values.iter().zip(&weights).enumerate() {
            if w > 0.0 && !v.is_finite() {
                return Err(Error::NonFiniteValue { index });
            }
        }
        Ok(Self { values, weights, dt })
    }

    /// Like [`GappySeries::new`], additionally requiring every weight to be
    /// exactly 0 or 1.
    pub fn binary(values: Vec<f64>, weights: Vec<f64>, dt: f64) -> Result<Self> {
        let series = Self::new(values, weights, dt)?;
        series.check_binary()?;
        Ok(series)
    }

    /// A gap-free series (all weights 1).
    pub fn fully_valid(values: Vec<f64>, dt: f64) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights, dt)
    }

    pub fn check_binary(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w != 0.0 && w != 1.0) {
            Some(index) => Err(Error::NonBinaryWeight {
                index,
                value: self.weights[index],
            }),
            None => Ok(()),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum of weights, `D`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn valid_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn is_binary(&self) -> bool {
        self.check_binary().is_ok()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of_weights(&self.weights)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>, f64) {
        (self.values, self.weights, self.dt)
    }
}

pub(crate) fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &w) in weights.iter().enumerate() {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::NegativeWeight { index, value: w });
        }
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::AllInvalid);
    }
    Ok(())
}

/// Contiguous integer lag range `k1..=k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct LagWindow {
    k1: i64,
    k2: i64,
}

impl LagWindow {
    pub fn new(k1: i64, k2: i64) -> Result<Self> {
        if k1 > k2 {
            return Err(Error::InvalidWindow { k1, k2 });
        }
        Ok(Self { k1, k2 })
    }

    /// The window `-floor(K/2) ..= floor((K-1)/2)` used for auto spectra.
    pub fn centered(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidWindow { k1: 0, k2: -1 });
        }
        let k = len as i64;
        Ok(Self {
            k1: -(k / 2),
            k2: (k - 1) / 2,
        })
    }

    pub fn single(lag: i64) -> Self {
        Self { k1: lag, k2: lag }
    }

    pub fn k1(&self) -> i64 {
        self.k1
    }

    pub fn k2(&self) -> i64 {
        self.k2
    }

    /// Number of lags, `K`.
    pub fn len(&self) -> usize {
        (self.k2 - self.k1 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lags(&self) -> impl ExactSizeIterator<Item = i64> + Clone {
        let k1 = self.k1;
        (0..self.len()).map(move |i| k1 + i as i64)
    }

    pub fn contains(&self, lag: i64) -> bool {
        (self.k1..=self.k2).contains(&lag)
    }

    pub fn index_of(&self, lag: i64) -> Option<usize> {
        self.contains(lag).then(|| (lag - self.k1) as usize)
    }

    pub fn is_centered(&self) -> bool {
        LagWindow::centered(self.len()).map(|w| w == *self).unwrap_or(false)
    }

    /// Admissible for the auto mapping matrix on `n` samples:
    /// `-(n-1) < k1 <= k2 < n-1`.
    pub fn check_auto_correctable(&self, n: usize) -> Result<()> {
        self.check_correctable(n, n)
    }

    /// Admissible for the cross mapping matrix: `-(nx-1) < k1 <= k2 < ny-1`.
    pub fn check_correctable(&self, nx: usize, ny: usize) -> Result<()> {
        let min = -(nx as i64 - 1) + 1;
        let max = ny as i64 - 2;
        if self.k1 < min || self.k2 > max {
            return Err(Error::SingularWindow {
                window: *self,
                min,
                max,
            });
        }
        Ok(())
    }

    /// Lags representable by zero-padded estimates: `-(nx-1) ..= ny-1`.
    pub fn check_estimable(&self, nx: usize, ny: usize) -> Result<()> {
        let min = -(nx as i64 - 1);
        let max = ny as i64 - 1;
        if self.k1 < min || self.k2 > max {
            return Err(Error::WindowOutOfRange {
                window: *self,
                min,
                max,
            });
        }
        Ok(())
    }
}

impl fmt::Display for LagWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k1, self.k2)
    }
}

impl FromStr for LagWindow {
    type Err = Error;

    /// Parses `k1:k2` or a single lag `k`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad lag window '{s}', expected k1:k2"));
        let s = s.trim();
        match s.split_once(':') {
            Some((a, b)) => {
                let k1 = a.trim().parse().map_err(|_| bad())?;
                let k2 = b.trim().parse().map_err(|_| bad())?;
                LagWindow::new(k1, k2)
            }
            None => s.parse().map(LagWindow::single).map_err(|_| bad()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WindowRepr {
    k1: i64,
    k2: i64,
}

impl TryFrom<WindowRepr> for LagWindow {
    type Error = Error;
    fn try_from(r: WindowRepr) -> Result<Self> {
        LagWindow::new(r.k1, r.k2)
    }
}

impl From<LagWindow> for WindowRepr {
    fn from(w: LagWindow) -> Self {
        WindowRepr { k1: w.k1, k2: w.k2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Auto,
    Cross,
}

/// SHA-256 digest of a weight sequence (or an ordered pair of them).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn of_weights(weights: &[f64]) -> Self {
        let mut hasher = Sha256::new();
        hash_weights(&mut hasher, b"auto", weights);
        Self(hasher.finalize().into())
    }

    pub fn of_pair(wx: &[f64], wy: &[f64]) -> Self {
        let mut hasher = Sha256::new();
        hash_weights(&mut hasher, b"x", wx);
        hash_weights(&mut hasher, b"y", wy);
        Self(hasher.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

fn hash_weights(hasher: &mut Sha256, tag: &[u8], weights: &[f64]) {
    hasher.update(tag);
    hasher.update((weights.len() as u64).to_le_bytes());
    for w in weights {
        // -0.0 and 0.0 mean the same thing
        let w = if *w == 0.0 { 0.0 } else { *w };
        hasher.update(w.to_bits().to_le_bytes());
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint(")?;
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Auto- or cross-covariance values over a lag window together with the
/// pair weights `W_k` that normalised them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    window: LagWindow,
    values: Vec<f64>,
    pair_weights: Vec<f64>,
    dt: f64,
    kind: EstimateKind,
    corrected: bool,
    fingerprint: Fingerprint,
}

impl CovarianceEstimate {
    pub fn new(
        window: LagWindow,
        values: Vec<f64>,
        pair_weights: Vec<f64>,
        dt: f64,
        kind: EstimateKind,
        fingerprint: Fingerprint,
    ) -> Result<Self> {
        let k = window.len();
        for len in [values.len(), pair_weights.len()] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: len,
                });
            }
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::NonPositiveDt(dt));
        }
        let holes: Vec<i64> = window
            .lags()
            .zip(&pair_weights)
            .filter(|(_, &w)| w.is_nan() || w <= 0.0)
            .map(|(k, _)| k)
            .collect();
        if !holes.is_empty() {
            return Err(Error::InsufficientPairCoverage { lags: holes });
        }
        Ok(Self {
            window,
            values,
            pair_weights,
            dt,
            kind,
            corrected: false,
            fingerprint,
        })
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, corrected: bool) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            corrected,
            ..self.clone()
        }
    }

    pub fn window(&self) -> LagWindow {
        self.window
    }

    pub fn lags(&self) -> impl ExactSizeIterator<Item = i64> + Clone {
        self.window.lags()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pair_weights(&self) -> &[f64] {
        &self.pair_weights
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn is_corrected(&self) -> bool {
        self.corrected
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn value_at(&self, lag: i64) -> Option<f64> {
        self.window.index_of(lag).map(|i| self.values[i])
    }

    pub fn pair_weight_at(&self, lag: i64) -> Option<f64> {
        self.window.index_of(lag).map(|i| self.pair_weights[i])
    }
}

/// The `K x K` operator mapping a hypothetical covariance on a lag window
/// onto the expectation of the mean-subtracted gappy estimate.
///
/// Rows are indexed by the estimated lag `k`, columns by the true lag `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingMatrix {
    entries: DMatrix<f64>,
    window: LagWindow,
    fingerprint: Fingerprint,
    kind: EstimateKind,
}

impl MappingMatrix {
    pub(crate) fn new(entries: DMatrix<f64>, window: LagWindow, fingerprint: Fingerprint, kind: EstimateKind) -> Self {
        debug_assert_eq!(entries.nrows(), window.len());
        debug_assert_eq!(entries.ncols(), window.len());
        Self {
            entries,
            window,
            fingerprint,
            kind,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Entry `a_kj` addressed by lags.
    pub fn entry(&self, k: i64, j: i64) -> Option<f64> {
        let r = self.window.index_of(k)?;
        let c = self.window.index_of(j)?;
        Some(self.entries[(r, c)])
    }

    pub fn window(&self) -> LagWindow {
        self.window
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }
}

/// Complex spectral densities on `f_j = j / (K dt)`,
/// `j = -floor(K/2) ..= floor((K-1)/2)`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub(crate) window: LagWindow,
    pub(crate) dt: f64,
    pub(crate) frequencies: Vec<f64>,
    pub(crate) values: Vec<Complex64>,
    pub(crate) kind: EstimateKind,
    pub(crate) corrected: bool,
    pub(crate) pair_weights: Vec<f64>,
    pub(crate) fingerprint: Fingerprint,
}

impl SpectrumEstimate {
    /// Frequency grid for `len` lags at sampling interval `dt`.
    pub fn frequency_grid(len: usize, dt: f64) -> Vec<f64> {
        let k = len as i64;
        (-(k / 2)..=(k - 1) / 2).map(|j| j as f64 / (k as f64 * dt)).collect()
    }

    /// Lag window of the covariance this spectrum was transformed from.
    pub fn window(&self) -> LagWindow {
        self.window
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn is_corrected(&self) -> bool {
        self.corrected
    }

    pub fn pair_weights(&self) -> &[f64] {
        &self.pair_weights
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Index of the zero-frequency bin.
    pub fn zero_index(&self) -> usize {
        self.window.len() / 2
    }
}

/// Mean and variance estimates of one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    /// `s^2`, normalised by the total weight.
    pub raw_variance: f64,
    /// Variance of the mean estimator evaluated with the corrected covariance.
    pub mean_estimator_variance: f64,
    /// `s^2 + var(mean)`.
    pub corrected_variance: f64,
    pub total_weight: f64,
}
