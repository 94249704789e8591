//! Synthetic signal pairs with analytically known covariances, and gap
//! models.
//!
//! Every random draw comes from a ChaCha8 stream seeded through
//! [`stream_seed`], so a realization depends only on its seed and index.
//! Values and gaps use separate streams: changing the value seed never
//! moves a gap.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::covariance_to_spectrum_direct;
use crate::types::{GappySeries, LagWindow};

/// Value written at invalid positions.
pub const INVALID_VALUE: f64 = -1.0;

/// Stream identifiers mixed into the seed.
pub mod streams {
    pub const VALUES: u64 = 0x5641_4c55;
    pub const GAPS_X: u64 = 0x4741_5058;
    pub const GAPS_Y: u64 = 0x4741_5059;
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` on `stream`:
/// `splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index)`.
pub fn stream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index)
}

fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream, index))
}

fn default_kind() -> String {
    "moving_average".into()
}

fn default_dt() -> f64 {
    1.0
}

/// Linear Gaussian process description. `kind` selects how the impulse
/// response is built: `moving_average` uses `ma_kernel`, `autoregressive`
/// uses `ar_coefficients` (`x_t = sum_i phi_i x_{t-i} + e_t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub ma_kernel: Vec<f64>,
    #[serde(default)]
    pub ar_coefficients: Vec<f64>,
    pub mean: f64,
    pub target_variance: f64,
    #[serde(default)]
    pub cross_delay: i64,
    #[serde(default)]
    pub cross_mix: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl ProcessSpec {
    pub fn moving_average(kernel: Vec<f64>, mean: f64, target_variance: f64) -> Self {
        Self {
            kind: default_kind(),
            ma_kernel: kernel,
            ar_coefficients: Vec::new(),
            mean,
            target_variance,
            cross_delay: 0,
            cross_mix: 0.0,
            seed: 0,
            dt: 1.0,
        }
    }

    pub fn autoregressive(coefficients: Vec<f64>, mean: f64, target_variance: f64) -> Self {
        Self {
            kind: "autoregressive".into(),
            ar_coefficients: coefficients,
            ..Self::moving_average(Vec::new(), mean, target_variance)
        }
    }

    /// Mean 8, variance 4, cross-covariance 3 at a delay of 10 samples.
    /// The spectrum rises steeply towards the Nyquist frequency and has a
    /// notch near 0.3 / dt.
    pub fn benchmark() -> Self {
        Self {
            cross_delay: 10,
            cross_mix: 0.75,
            ..Self::moving_average(benchmark_kernel(), 8.0, 4.0)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn order(&self) -> usize {
        match self.kind.as_str() {
            "autoregressive" => self.ar_coefficients.len(),
            _ => self.ma_kernel.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_variance.is_finite() && self.target_variance >= 0.0) {
            return Err(Error::InvalidProcess(format!(
                "target variance {} must be >= 0",
                self.target_variance
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidProcess("mean must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.cross_mix) {
            return Err(Error::InvalidProcess(format!(
                "cross_mix {} must lie in [0, 1]",
                self.cross_mix
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::NonPositiveDt(self.dt));
        }
        Ok(())
    }
}

/// `(-0.7)^m` for `m = 0..16`, convolved with a second-order notch at 0.3.
pub fn benchmark_kernel() -> Vec<f64> {
    let decay: Vec<f64> = (0..16).map(|m| (-0.7f64).powi(m)).collect();
    let r = 0.9;
    let notch = [1.0, -2.0 * r * (2.0 * PI * 0.3).cos(), r * r];
    let mut out = vec![0.0; decay.len() + notch.len() - 1];
    for (i, a) in decay.iter().enumerate() {
        for (j, b) in notch.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Builds the (unscaled) impulse response of a process kind.
pub trait ProcessModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn impulse_response(&self, spec: &ProcessSpec) -> Result<Vec<f64>>;
}

struct MovingAverage;

impl ProcessModel for MovingAverage {
    fn name(&self) -> &'static str {
        "moving_average"
    }

    fn impulse_response(&self, spec: &ProcessSpec) -> Result<Vec<f64>> {
        if spec.ma_kernel.is_empty() {
            return Err(Error::InvalidProcess("moving-average kernel is empty".into()));
        }
        if spec.ma_kernel.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidProcess("kernel has non-finite entries".into()));
        }
        Ok(spec.ma_kernel.clone())
    }
}

/// AR recursion unrolled into its impulse response, truncated once it has
/// decayed below `AR_TRUNCATION` of its peak for a full coefficient span.
struct Autoregressive;

const AR_TRUNCATION: f64 = 1e-12;
const AR_MAX_RESPONSE: usize = 1 << 17;

impl ProcessModel for Autoregressive {
    fn name(&self) -> &'static str {
        "autoregressive"
    }

    fn impulse_response(&self, spec: &ProcessSpec) -> Result<Vec<f64>> {
        let phi = &spec.ar_coefficients;
        if phi.is_empty() || phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidProcess(
                "autoregressive coefficients missing or non-finite".into(),
            ));
        }
        let p = phi.len();
        let mut psi = vec![1.0];
        let mut peak = 1.0f64;
        let mut quiet = 0;
        while psi.len() < AR_MAX_RESPONSE {
            let j = psi.len();
            let next: f64 = (1..=p.min(j)).map(|i| phi[i - 1] * psi[j - i]).sum();
            psi.push(next);
            peak = peak.max(next.abs());
            quiet = if next.abs() < AR_TRUNCATION * peak {
                quiet + 1
            } else {
                0
            };
            if quiet >= p {
                psi.truncate(psi.len() - quiet);
                return Ok(psi);
            }
        }
        Err(Error::InvalidProcess(
            "autoregressive response does not decay; the process is not stationary".into(),
        ))
    }
}

static PROCESS_MODELS: [&dyn ProcessModel; 2] = [&MovingAverage, &Autoregressive];

pub fn process_model(name: &str) -> Result<&'static dyn ProcessModel> {
    PROCESS_MODELS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "process kind",
            name: name.into(),
        })
}

pub fn process_model_names() -> Vec<&'static str> {
    PROCESS_MODELS.iter().map(|m| m.name()).collect()
}

/// Exact second-order description of a generated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessTruth {
    pub mean: f64,
    pub variance: f64,
    pub dt: f64,
    pub cross_delay: i64,
    pub cross_mix: f64,
    /// Impulse response scaled so that its energy equals `variance`.
    pub response: Vec<f64>,
}

impl ProcessTruth {
    pub fn from_spec(spec: &ProcessSpec) -> Result<Self> {
        spec.validate()?;
        let raw = process_model(&spec.kind)?.impulse_response(spec)?;
        let energy: f64 = raw.iter().map(|b| b * b).sum();
        let scale = if spec.target_variance == 0.0 {
            0.0
        } else if energy > 0.0 {
            (spec.target_variance / energy).sqrt()
        } else {
            return Err(Error::InvalidProcess("impulse response is identically zero".into()));
        };
        Ok(Self {
            mean: spec.mean,
            variance: spec.target_variance,
            dt: spec.dt,
            cross_delay: spec.cross_delay,
            cross_mix: spec.cross_mix,
            response: raw.into_iter().map(|b| b * scale).collect(),
        })
    }

    /// Largest lag with possibly non-zero autocovariance.
    pub fn correlation_length(&self) -> usize {
        self.response.len() - 1
    }

    pub fn autocovariance(&self, lag: i64) -> f64 {
        let k = lag.unsigned_abs() as usize;
        if k >= self.response.len() {
            return 0.0;
        }
        self.response.iter().zip(&self.response[k..]).map(|(a, b)| a * b).sum()
    }

    /// `E[(x_i - mean)(y_{i+lag} - mean)]`.
    pub fn cross_covariance(&self, lag: i64) -> f64 {
        self.cross_mix * self.autocovariance(lag - self.cross_delay)
    }

    pub fn auto_on(&self, window: LagWindow) -> Vec<f64> {
        window.lags().map(|k| self.autocovariance(k)).collect()
    }

    pub fn cross_on(&self, window: LagWindow) -> Vec<f64> {
        window.lags().map(|k| self.cross_covariance(k)).collect()
    }

    /// Transform of the window-truncated autocovariance on the grid of
    /// `window`.
    pub fn auto_spectrum_on(&self, window: LagWindow) -> Vec<Complex64> {
        covariance_to_spectrum_direct(window, &self.auto_on(window), self.dt)
    }

    pub fn cross_spectrum_on(&self, window: LagWindow) -> Vec<Complex64> {
        covariance_to_spectrum_direct(window, &self.cross_on(window), self.dt)
    }
}

/// Two gap-free series plus the truth they were drawn from.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub x: GappySeries,
    pub y: GappySeries,
    pub truth: ProcessTruth,
}

fn filtered(response: &[f64], noise: &[f64], len: usize) -> Vec<f64> {
    let span = response.len() - 1;
    (0..len)
        .map(|t| response.iter().enumerate().map(|(m, b)| b * noise[t + span - m]).sum())
        .collect()
}

/// Realization 0 of [`generate_pair_at`].
pub fn generate_pair(spec: &ProcessSpec, n: usize) -> Result<GeneratedPair> {
    generate_pair_at(spec, n, 0)
}

/// `x = mean + h * e`, `y = mean + mix (x shifted by the delay - mean) +
/// sqrt(1 - mix^2) (h * u)` with independent unit Gaussian `e`, `u`.
pub fn generate_pair_at(spec: &ProcessSpec, n: usize, index: u64) -> Result<GeneratedPair> {
    let truth = ProcessTruth::from_spec(spec)?;
    let min = spec.order() + spec.cross_delay.unsigned_abs() as usize;
    if n <= min {
        return Err(Error::SeriesTooShort { n, min });
    }
    let delay = spec.cross_delay;
    let total = n + delay.unsigned_abs() as usize;
    let span = truth.response.len() - 1;
    let mut rng = rng_for(spec.seed, streams::VALUES, index);
    let e: Vec<f64> = (0..total + span).map(|_| rng.sample(StandardNormal)).collect();
    let u: Vec<f64> = (0..n + span).map(|_| rng.sample(StandardNormal)).collect();
    let base = filtered(&truth.response, &e, total);
    let own = filtered(&truth.response, &u, n);

    let sx = delay.max(0) as usize;
    let sy = (-delay).max(0) as usize;
    let mix = spec.cross_mix;
    let rest = (1.0 - mix * mix).sqrt();
    let x = (0..n).map(|i| spec.mean + base[i + sx]).collect();
    let y = (0..n).map(|i| spec.mean + mix * base[i + sy] + rest * own[i]).collect();
    Ok(GeneratedPair {
        x: GappySeries::fully_valid(x, spec.dt)?,
        y: GappySeries::fully_valid(y, spec.dt)?,
        truth,
    })
}

fn default_gap_kind() -> String {
    "bernoulli".into()
}

/// Gap model description. Only the fields of the selected `kind` are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapModelSpec {
    #[serde(default = "default_gap_kind")]
    pub kind: String,
    #[serde(default)]
    pub valid_probability: Option<f64>,
    #[serde(default)]
    pub switch_probability: Option<f64>,
    #[serde(default)]
    pub mask: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl GapModelSpec {
    pub fn none() -> Self {
        Self::bernoulli(1.0)
    }

    pub fn bernoulli(valid_probability: f64) -> Self {
        Self {
            kind: "bernoulli".into(),
            valid_probability: Some(valid_probability),
            switch_probability: None,
            mask: None,
            seed: 0,
        }
    }

    pub fn markov(switch_probability: f64) -> Self {
        Self {
            kind: "markov".into(),
            valid_probability: None,
            switch_probability: Some(switch_probability),
            mask: None,
            seed: 0,
        }
    }

    pub fn static_mask(mask: Vec<f64>) -> Self {
        Self {
            kind: "static_mask".into(),
            valid_probability: None,
            switch_probability: None,
            mask: Some(mask),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn probability(p: Option<f64>, field: &str) -> Result<f64> {
    let p = p.ok_or_else(|| Error::Config(format!("gap model needs `{field}`")))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Draws a weight sequence of length `n`.
pub trait GapModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn validate(&self, spec: &GapModelSpec) -> Result<()>;
    fn draw(&self, spec: &GapModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

/// Each sample valid independently with `valid_probability`.
struct Bernoulli;

impl GapModel for Bernoulli {
    fn name(&self) -> &'static str {
        "bernoulli"
    }

    fn validate(&self, spec: &GapModelSpec) -> Result<()> {
        probability(spec.valid_probability, "valid_probability").map(drop)
    }

    fn draw(&self, spec: &GapModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let p = probability(spec.valid_probability, "valid_probability")?;
        Ok((0..n)
            .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
            .collect())
    }
}

/// Symmetric two-state chain started from its stationary law (valid with
/// probability 1/2); the state flips with `switch_probability` per step.
struct Markov;

impl GapModel for Markov {
    fn name(&self) -> &'static str {
        "markov"
    }

    fn validate(&self, spec: &GapModelSpec) -> Result<()> {
        probability(spec.switch_probability, "switch_probability").map(drop)
    }

    fn draw(&self, spec: &GapModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let p = probability(spec.switch_probability, "switch_probability")?;
        let mut valid = rng.random::<f64>() < 0.5;
        Ok((0..n)
            .map(|i| {
                if i > 0 && rng.random::<f64>() < p {
                    valid = !valid;
                }
                if valid {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// The same fixed weights for every realization.
struct StaticMask;

impl GapModel for StaticMask {
    fn name(&self) -> &'static str {
        "static_mask"
    }

    fn validate(&self, spec: &GapModelSpec) -> Result<()> {
        let mask = spec
            .mask
            .as_ref()
            .ok_or_else(|| Error::Config("gap model needs `mask`".into()))?;
        crate::types::validate_weights(mask)
    }

    fn draw(&self, spec: &GapModelSpec, n: usize, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.validate(spec)?;
        let mask = spec.mask.as_ref().expect("validated");
        if mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: mask.len(),
            });
        }
        Ok(mask.clone())
    }
}

static GAP_MODELS: [&dyn GapModel; 3] = [&Bernoulli, &Markov, &StaticMask];

pub fn gap_model(name: &str) -> Result<&'static dyn GapModel> {
    GAP_MODELS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "gap model",
            name: name.into(),
        })
}

pub fn gap_model_names() -> Vec<&'static str> {
    GAP_MODELS.iter().map(|m| m.name()).collect()
}

pub fn validate_gap_model(spec: &GapModelSpec) -> Result<()> {
    gap_model(&spec.kind)?.validate(spec)
}

/// Weights of realization `index` on `stream`, independent of any values.
pub fn draw_weights(model: &GapModelSpec, n: usize, stream: u64, index: u64) -> Result<Vec<f64>> {
    let mut rng = rng_for(model.seed, stream, index);
    gap_model(&model.kind)?.draw(model, n, &mut rng)
}

/// Realization 0 of [`apply_gaps_at`] on the x stream.
pub fn apply_gaps(series: &GappySeries, model: &GapModelSpec) -> Result<GappySeries> {
    apply_gaps_at(series, model, streams::GAPS_X, 0)
}

/// Multiplies the existing weights by a drawn mask and writes
/// [`INVALID_VALUE`] wherever the result is zero. Fails with `AllInvalid`
/// when nothing survives.
pub fn apply_gaps_at(series: &GappySeries, model: &GapModelSpec, stream: u64, index: u64) -> Result<GappySeries> {
    let drawn = draw_weights(model, series.len(), stream, index)?;
    let weights: Vec<f64> = series.weights().iter().zip(&drawn).map(|(a, b)| a * b).collect();
    let values = series
        .values()
        .iter()
        .zip(&weights)
        .map(|(&z, &w)| if w > 0.0 { z } else { INVALID_VALUE })
        .collect();
    GappySeries::new(values, weights, series.dt())
}
