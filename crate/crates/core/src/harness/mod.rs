//! Monte-Carlo experiments: draw many gappy realizations of a known
//! process, run the selected estimators and summarise them against the
//! truth.
//!
//! Realizations are generated and estimated in parallel, but every
//! realization is seeded from its index alone and the results are reduced
//! in index order with compensated sums, so the output does not depend on
//! the number of worker threads.

mod estimators;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

pub use estimators::{estimator, estimator_names, EstimateCurves, Estimator, EstimatorOptions};

use crate::correction::CorrectionOptions;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_file};
use crate::simgen::{
    apply_gaps_at, generate_pair_at, stream_seed, streams, validate_gap_model, GapModelSpec, ProcessSpec, ProcessTruth,
};
use crate::spectrum::{covariance_to_spectrum_direct, inverse_transform};
use crate::types::{GappySeries, LagWindow, SpectrumEstimate};

pub const SCHEMA_VERSION: u32 = 1;
pub const ENV_THREADS: &str = "GAPCOV_THREADS";
pub const ENV_OUT: &str = "GAPCOV_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Bias,
    Rms,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(n) => vec![n],
        OneOrMany::Many(v) => v,
    })
}

/// JSON experiment description (`"schema": 1`). `n_samples` counts valid
/// and invalid samples together and may be a single size or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub process: ProcessSpec,
    pub gaps: GapModelSpec,
    #[serde(deserialize_with = "one_or_many")]
    pub n_samples: Vec<usize>,
    pub n_realizations: usize,
    pub window: LagWindow,
    #[serde(default)]
    pub cross_window: Option<LagWindow>,
    pub estimators: Vec<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub lomb_scargle_alpha: Option<f64>,
    #[serde(default)]
    pub condition_threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    fn estimator_options(&self) -> EstimatorOptions {
        let mut correction = CorrectionOptions::default();
        if let Some(t) = self.condition_threshold {
            correction.condition_threshold = t;
        }
        EstimatorOptions {
            correction,
            lomb_scargle_alpha: self.lomb_scargle_alpha,
        }
    }

    fn build_estimators(&self) -> Result<Vec<Box<dyn Estimator>>> {
        let options = self.estimator_options();
        self.estimators.iter().map(|n| estimator(n, &options)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.n_realizations == 0 {
            return Err(Error::Config("n_realizations must be at least 1".into()));
        }
        if self.n_samples.is_empty() {
            return Err(Error::Config("n_samples is empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        if let Some(a) = self.lomb_scargle_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::AlphaOutOfRange(a));
            }
        }
        let estimators = self.build_estimators()?;
        ProcessTruth::from_spec(&self.process)?;
        validate_gap_model(&self.gaps)?;
        let correctable = estimators.iter().any(|e| e.needs_correctable_window());
        for &n in &self.n_samples {
            self.window.check_estimable(n, n)?;
            if correctable {
                self.window.check_auto_correctable(n)?;
            }
            if let Some(cw) = self.cross_window {
                cw.check_estimable(n, n)?;
                if correctable {
                    cw.check_correctable(n, n)?;
                }
            }
        }
        Ok(())
    }
}

/// Mean, standard error of the mean and RMS deviation from the truth, per
/// grid point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveStats {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub rms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumStats {
    pub mean: Vec<Complex64>,
    pub std_error_re: Vec<f64>,
    pub std_error_im: Vec<f64>,
    /// Root mean square of `|S - S_true|`.
    pub rms: Vec<f64>,
}

/// Relative asymmetry below which an auto estimate counts as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Largest relative violations of the transform identities seen over all
/// averaged realizations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdentityDeviations {
    /// `|S(0) - dt sum C_k|`, relative to `dt sum |C_k|`.
    pub zero_frequency: f64,
    /// Covariance recovered from the spectrum versus the covariance,
    /// relative to `max |C_k|`.
    pub round_trip: f64,
    /// Largest imaginary part of the auto spectrum over the symmetric lag
    /// core `-m..=m`, relative to the largest magnitude; zero for cross
    /// spectra.
    pub imaginary: f64,
    /// `max |C_k - C_-k|` over the symmetric core, relative to `max |C_k|`;
    /// zero for cross spectra.
    pub asymmetry: f64,
}

impl IdentityDeviations {
    fn merge(&mut self, other: &Self) {
        self.zero_frequency = self.zero_frequency.max(other.zero_frequency);
        self.round_trip = self.round_trip.max(other.round_trip);
        self.imaginary = self.imaginary.max(other.imaginary);
        self.asymmetry = self.asymmetry.max(other.asymmetry);
    }

    /// Imaginary residue, when the estimates were symmetric enough for the
    /// spectrum to be real.
    pub fn reality(&self) -> Option<f64> {
        (self.asymmetry <= SYMMETRY_TOLERANCE).then_some(self.imaginary)
    }

    /// Largest deviation among the identities that apply.
    pub fn max(&self) -> f64 {
        self.zero_frequency
            .max(self.round_trip)
            .max(self.reality().unwrap_or(0.0))
    }
}

/// Summary of one estimator on one channel (auto or cross).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelResult {
    pub averaged: usize,
    pub excluded: usize,
    /// Excluded realizations by error code.
    pub failures: BTreeMap<String, usize>,
    pub covariance: CurveStats,
    pub spectrum: SpectrumStats,
    /// Estimate minus its closed-form expectation for the realization's
    /// weights; `rms` here is the RMS of that difference.
    pub residual: Option<CurveStats>,
    pub identities: IdentityDeviations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub name: String,
    pub auto: ChannelResult,
    pub cross: Option<ChannelResult>,
}

/// Truth curves on the estimation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthCurves {
    pub window: LagWindow,
    pub covariance: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeResult {
    pub n_samples: usize,
    pub process_seed: u64,
    pub gap_seed: u64,
    pub auto_truth: TruthCurves,
    pub cross_truth: Option<TruthCurves>,
    pub estimators: Vec<EstimatorResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub sizes: Vec<SizeResult>,
    pub wall_time_seconds: f64,
    pub threads: usize,
}

impl ExperimentResult {
    pub fn size(&self, n: usize) -> Option<&SizeResult> {
        self.sizes.iter().find(|s| s.n_samples == n)
    }
}

impl SizeResult {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorResult> {
        self.estimators.iter().find(|e| e.name == name)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums of deviations from the truth and of their squares.
#[derive(Debug, Clone)]
struct Accumulator {
    dev: Vec<Compensated>,
    sq: Vec<Compensated>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self {
            dev: vec![Compensated::default(); len],
            sq: vec![Compensated::default(); len],
        }
    }

    fn add(&mut self, values: &[f64], truth: &[f64]) {
        for (i, (v, t)) in values.iter().zip(truth).enumerate() {
            let d = v - t;
            self.dev[i].add(d);
            self.sq[i].add(d * d);
        }
    }

    fn stats(&self, truth: &[f64], count: usize) -> CurveStats {
        let n = count as f64;
        let mut out = CurveStats::default();
        for (i, t) in truth.iter().enumerate() {
            let (s, q) = (self.dev[i].value(), self.sq[i].value());
            let mean_dev = s / n;
            let var = if count > 1 {
                ((q - n * mean_dev * mean_dev) / (n - 1.0)).max(0.0)
            } else {
                f64::NAN
            };
            out.mean.push(t + mean_dev);
            out.std_error.push((var / n).sqrt());
            out.rms.push((q / n).sqrt());
        }
        out
    }
}

struct ChannelAccumulator {
    covariance: Accumulator,
    spec_re: Accumulator,
    spec_im: Accumulator,
    residual: Option<Accumulator>,
    count: usize,
    failures: BTreeMap<String, usize>,
    identities: IdentityDeviations,
}

impl ChannelAccumulator {
    fn new(len: usize) -> Self {
        Self {
            covariance: Accumulator::new(len),
            spec_re: Accumulator::new(len),
            spec_im: Accumulator::new(len),
            residual: None,
            count: 0,
            failures: BTreeMap::new(),
            identities: IdentityDeviations::default(),
        }
    }

    fn add(&mut self, outcome: &Outcome, truth: &TruthCurves) {
        match outcome {
            Outcome::Failed(code) => *self.failures.entry((*code).to_string()).or_default() += 1,
            Outcome::Ok {
                curves,
                residual,
                identities,
            } => {
                self.count += 1;
                self.covariance.add(&curves.covariance, &truth.covariance);
                let re: Vec<f64> = curves.spectrum.values().iter().map(|c| c.re).collect();
                let im: Vec<f64> = curves.spectrum.values().iter().map(|c| c.im).collect();
                let tre: Vec<f64> = truth.spectrum.iter().map(|c| c.re).collect();
                let tim: Vec<f64> = truth.spectrum.iter().map(|c| c.im).collect();
                self.spec_re.add(&re, &tre);
                self.spec_im.add(&im, &tim);
                if let Some(r) = residual {
                    let zeros = vec![0.0; r.len()];
                    self.residual
                        .get_or_insert_with(|| Accumulator::new(r.len()))
                        .add(r, &zeros);
                }
                self.identities.merge(identities);
            }
        }
    }

    fn finish(self, truth: &TruthCurves) -> ChannelResult {
        let n = self.count;
        let excluded = self.failures.values().sum();
        let tre: Vec<f64> = truth.spectrum.iter().map(|c| c.re).collect();
        let tim: Vec<f64> = truth.spectrum.iter().map(|c| c.im).collect();
        let re = self.spec_re.stats(&tre, n);
        let im = self.spec_im.stats(&tim, n);
        let rms = re
            .rms
            .iter()
            .zip(&im.rms)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .collect();
        let zeros = vec![0.0; truth.covariance.len()];
        ChannelResult {
            averaged: n,
            excluded,
            failures: self.failures,
            covariance: self.covariance.stats(&truth.covariance, n),
            spectrum: SpectrumStats {
                mean: re
                    .mean
                    .iter()
                    .zip(&im.mean)
                    .map(|(a, b)| Complex64::new(*a, *b))
                    .collect(),
                std_error_re: re.std_error,
                std_error_im: im.std_error,
                rms,
            },
            residual: self.residual.map(|r| r.stats(&zeros, n)),
            identities: self.identities,
        }
    }
}

enum Outcome {
    Ok {
        curves: EstimateCurves,
        residual: Option<Vec<f64>>,
        identities: IdentityDeviations,
    },
    Failed(&'static str),
}

/// Checks the transform identities on one estimate.
pub fn identity_deviations(covariance: &[f64], spectrum: &SpectrumEstimate, auto: bool) -> IdentityDeviations {
    let dt = spectrum.dt();
    let sum: f64 = covariance.iter().sum();
    let abs_sum: f64 = covariance.iter().map(|c| c.abs()).sum();
    let s0 = spectrum.values()[spectrum.zero_index()];
    let zero_frequency = (s0 - Complex64::new(dt * sum, 0.0)).norm() / (dt * abs_sum).max(f64::MIN_POSITIVE);
    let back = inverse_transform(spectrum);
    let cmax = covariance
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let round_trip = back
        .iter()
        .zip(covariance)
        .map(|(b, c)| (b - Complex64::new(*c, 0.0)).norm())
        .fold(0.0, f64::max)
        / cmax;
    let (imaginary, asymmetry) = if auto {
        symmetric_core(covariance, spectrum, cmax)
    } else {
        (0.0, 0.0)
    };
    IdentityDeviations {
        zero_frequency,
        round_trip,
        imaginary,
        asymmetry,
    }
}

/// Imaginary residue and asymmetry of the estimate restricted to its
/// symmetric core `-m..=m`.
fn symmetric_core(covariance: &[f64], spectrum: &SpectrumEstimate, cmax: f64) -> (f64, f64) {
    let window = spectrum.window();
    let m = (-window.k1()).min(window.k2());
    if m < 0 {
        return (0.0, 0.0);
    }
    let core = LagWindow::new(-m, m).expect("non-empty core");
    let start = (-m - window.k1()) as usize;
    let values = &covariance[start..start + core.len()];
    let asymmetry = values
        .iter()
        .zip(values.iter().rev())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / cmax;
    let spec = covariance_to_spectrum_direct(core, values, spectrum.dt());
    let smax = spec
        .iter()
        .fold(0.0f64, |acc, s| acc.max(s.norm()))
        .max(f64::MIN_POSITIVE);
    (spec.iter().fold(0.0f64, |acc, s| acc.max(s.im.abs())) / smax, asymmetry)
}

fn evaluate(result: Result<EstimateCurves>, prediction: Option<Result<Vec<f64>>>, auto: bool) -> Outcome {
    let curves = match result {
        Ok(c) => c,
        Err(e) => return Outcome::Failed(e.code()),
    };
    let residual = match prediction {
        None => None,
        Some(Ok(p)) => Some(curves.covariance.iter().zip(&p).map(|(c, p)| c - p).collect()),
        Some(Err(e)) => return Outcome::Failed(e.code()),
    };
    let identities = identity_deviations(&curves.covariance, &curves.spectrum, auto);
    Outcome::Ok {
        curves,
        residual,
        identities,
    }
}

struct Realization {
    auto: Vec<Outcome>,
    cross: Vec<Option<Outcome>>,
}

struct Plan<'a> {
    process: ProcessSpec,
    gaps: GapModelSpec,
    n: usize,
    window: LagWindow,
    cross_window: Option<LagWindow>,
    estimators: &'a [Box<dyn Estimator>],
    auto_gamma: Vec<f64>,
    cross_gamma: Option<Vec<f64>>,
}

fn realize(plan: &Plan, index: u64) -> Realization {
    let draw = || -> Result<(GappySeries, GappySeries)> {
        let pair = generate_pair_at(&plan.process, plan.n, index)?;
        let x = apply_gaps_at(&pair.x, &plan.gaps, streams::GAPS_X, index)?;
        let y = apply_gaps_at(&pair.y, &plan.gaps, streams::GAPS_Y, index)?;
        Ok((x, y))
    };
    let (x, y) = match draw() {
        Ok(p) => p,
        Err(e) => {
            let code = e.code();
            return Realization {
                auto: plan.estimators.iter().map(|_| Outcome::Failed(code)).collect(),
                cross: plan
                    .estimators
                    .iter()
                    .map(|e| (plan.cross_window.is_some() && e.has_cross()).then_some(Outcome::Failed(code)))
                    .collect(),
            };
        }
    };
    let auto = plan
        .estimators
        .iter()
        .map(|e| {
            let prediction = e.predicted_auto(x.weights(), plan.window, &plan.auto_gamma);
            evaluate(e.auto(&x, plan.window), prediction, true)
        })
        .collect();
    let cross = plan
        .estimators
        .iter()
        .map(|e| {
            let cw = plan.cross_window?;
            let result = e.cross(&x, &y, cw)?;
            let gamma = plan
                .cross_gamma
                .as_deref()
                .expect("cross truth exists with a cross window");
            let prediction = e.predicted_cross(x.weights(), y.weights(), cw, gamma);
            Some(evaluate(result, prediction, false))
        })
        .collect();
    Realization { auto, cross }
}

fn truth_curves(truth: &ProcessTruth, window: LagWindow, cross: bool) -> TruthCurves {
    let (covariance, spectrum) = if cross {
        (truth.cross_on(window), truth.cross_spectrum_on(window))
    } else {
        (truth.auto_on(window), truth.auto_spectrum_on(window))
    };
    TruthCurves {
        window,
        covariance,
        spectrum,
        frequencies: SpectrumEstimate::frequency_grid(window.len(), truth.dt),
    }
}

/// Realizations per parallel work item.
const CHUNK: usize = 8;

fn run_size(config: &ExperimentConfig, estimators: &[Box<dyn Estimator>], n: usize) -> Result<SizeResult> {
    let process_seed = stream_seed(config.base_seed, config.process.seed, n as u64);
    let gap_seed = stream_seed(config.base_seed, config.gaps.seed, n as u64);
    let process = ProcessSpec {
        seed: process_seed,
        ..config.process.clone()
    };
    let gaps = GapModelSpec {
        seed: gap_seed,
        ..config.gaps.clone()
    };
    let truth = ProcessTruth::from_spec(&process)?;
    let auto_truth = truth_curves(&truth, config.window, false);
    let cross_truth = config.cross_window.map(|w| truth_curves(&truth, w, true));
    let plan = Plan {
        process,
        gaps,
        n,
        window: config.window,
        cross_window: config.cross_window,
        estimators,
        auto_gamma: auto_truth.covariance.clone(),
        cross_gamma: cross_truth.as_ref().map(|t| t.covariance.clone()),
    };

    let mut auto_acc: Vec<ChannelAccumulator> = estimators
        .iter()
        .map(|_| ChannelAccumulator::new(config.window.len()))
        .collect();
    let mut cross_acc: Vec<Option<ChannelAccumulator>> = estimators
        .iter()
        .map(|_| config.cross_window.map(|w| ChannelAccumulator::new(w.len())))
        .collect();

    // Bounded batches keep memory flat for long runs; within a batch the
    // results come back in index order.
    let batch = CHUNK * rayon::current_num_threads().max(1) * 4;
    let total = config.n_realizations;
    let mut start = 0;
    while start < total {
        let end = (start + batch).min(total);
        let results: Vec<Realization> = (start..end)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|r| realize(&plan, r as u64))
            .collect();
        for real in &results {
            for (acc, o) in auto_acc.iter_mut().zip(&real.auto) {
                acc.add(o, &auto_truth);
            }
            if let Some(ct) = &cross_truth {
                for (acc, o) in cross_acc.iter_mut().zip(&real.cross) {
                    if let (Some(acc), Some(o)) = (acc.as_mut(), o) {
                        acc.add(o, ct);
                    }
                }
            }
        }
        start = end;
    }

    let results = estimators
        .iter()
        .zip(auto_acc)
        .zip(cross_acc)
        .map(|((e, a), c)| {
            let has_cross = config.cross_window.is_some() && e.has_cross();
            EstimatorResult {
                name: e.name().to_string(),
                auto: a.finish(&auto_truth),
                cross: if has_cross {
                    c.zip(cross_truth.as_ref()).map(|(c, t)| c.finish(t))
                } else {
                    None
                },
            }
        })
        .collect();

    Ok(SizeResult {
        n_samples: n,
        process_seed,
        gap_seed,
        auto_truth,
        cross_truth,
        estimators: results,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(ENV_THREADS) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{ENV_THREADS}='{v}' is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let estimators = config.build_estimators()?;
    let pool = thread_pool()?;
    let started = Instant::now();
    let sizes = pool.install(|| {
        config
            .n_samples
            .iter()
            .map(|&n| run_size(config, &estimators, n))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        config: config.clone(),
        sizes,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
    })
}

/// Empirical means, standard errors and truth for every configured size.
pub fn run_bias_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run(config)
}

/// Same realizations as [`run_bias_experiment`]; the outputs focus on the
/// RMS error and how it scales between the configured sizes.
pub fn run_rms_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.n_samples.len() < 2 {
        return Err(Error::Config(
            "an RMS experiment needs at least two sizes in n_samples".into(),
        ));
    }
    run(config)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.experiment {
        ExperimentKind::Bias => run_bias_experiment(config),
        ExperimentKind::Rms => run_rms_experiment(config),
    }
}

/// Output directory: explicit argument, then `GAPCOV_OUT`, then the config,
/// then `gapcov-out`.
pub fn resolve_output_dir(config: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("gapcov-out"))
}

fn channels(size: &SizeResult, cross: bool) -> Vec<(&str, &ChannelResult)> {
    size.estimators
        .iter()
        .filter_map(|e| {
            if cross {
                e.cross.as_ref().map(|c| (e.name.as_str(), c))
            } else {
                Some((e.name.as_str(), &e.auto))
            }
        })
        .collect()
}

fn write_covariance_table(path: &Path, result: &ExperimentResult, cross: bool) -> Result<()> {
    write_file(path, |w| {
        use std::io::Write;
        writeln!(
            w,
            "n_samples,method,lag_index,lag_time,truth,mean,std_error,rms,averaged,excluded"
        )?;
        for size in &result.sizes {
            let Some(truth) = (if cross {
                size.cross_truth.as_ref()
            } else {
                Some(&size.auto_truth)
            }) else {
                continue;
            };
            let dt = result.config.process.dt;
            for (name, ch) in channels(size, cross) {
                for (i, k) in truth.window.lags().enumerate() {
                    let c = &ch.covariance;
                    writeln!(
                        w,
                        "{},{name},{k},{},{},{},{},{},{},{}",
                        size.n_samples,
                        fmt_f64(k as f64 * dt),
                        fmt_f64(truth.covariance[i]),
                        fmt_f64(c.mean[i]),
                        fmt_f64(c.std_error[i]),
                        fmt_f64(c.rms[i]),
                        ch.averaged,
                        ch.excluded
                    )?;
                }
            }
        }
        Ok(())
    })
}

fn write_spectrum_table(path: &Path, result: &ExperimentResult, cross: bool) -> Result<()> {
    write_file(path, |w| {
        use std::io::Write;
        writeln!(
            w,
            "n_samples,method,freq,truth_real,truth_imag,mean_real,mean_imag,std_error_real,std_error_imag,rms,averaged,excluded"
        )?;
        for size in &result.sizes {
            let Some(truth) = (if cross {
                size.cross_truth.as_ref()
            } else {
                Some(&size.auto_truth)
            }) else {
                continue;
            };
            for (name, ch) in channels(size, cross) {
                let s = &ch.spectrum;
                for (i, f) in truth.frequencies.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{name},{},{},{},{},{},{},{},{},{},{}",
                        size.n_samples,
                        fmt_f64(*f),
                        fmt_f64(truth.spectrum[i].re),
                        fmt_f64(truth.spectrum[i].im),
                        fmt_f64(s.mean[i].re),
                        fmt_f64(s.mean[i].im),
                        fmt_f64(s.std_error_re[i]),
                        fmt_f64(s.std_error_im[i]),
                        fmt_f64(s.rms[i]),
                        ch.averaged,
                        ch.excluded
                    )?;
                }
            }
        }
        Ok(())
    })
}

fn write_residual_table(path: &Path, result: &ExperimentResult) -> Result<()> {
    write_file(path, |w| {
        use std::io::Write;
        writeln!(w, "n_samples,method,channel,lag_index,mean_residual,std_error")?;
        for size in &result.sizes {
            for (channel, cross) in [("auto", false), ("cross", true)] {
                let Some(truth) = (if cross {
                    size.cross_truth.as_ref()
                } else {
                    Some(&size.auto_truth)
                }) else {
                    continue;
                };
                for (name, ch) in channels(size, cross) {
                    let Some(r) = &ch.residual else { continue };
                    for (i, k) in truth.window.lags().enumerate() {
                        writeln!(
                            w,
                            "{},{name},{channel},{k},{},{}",
                            size.n_samples,
                            fmt_f64(r.mean[i]),
                            fmt_f64(r.std_error[i])
                        )?;
                    }
                }
            }
        }
        Ok(())
    })
}

/// RMS of the smallest size divided by RMS of the largest, per grid point.
fn write_rms_ratio_table(path: &Path, result: &ExperimentResult) -> Result<()> {
    let (Some(small), Some(large)) = (
        result.sizes.iter().min_by_key(|s| s.n_samples),
        result.sizes.iter().max_by_key(|s| s.n_samples),
    ) else {
        return Ok(());
    };
    write_file(path, |w| {
        use std::io::Write;
        writeln!(
            w,
            "method,channel,curve,coordinate,n_small,n_large,rms_small,rms_large,ratio"
        )?;
        for (channel, cross) in [("auto", false), ("cross", true)] {
            let Some(truth) = (if cross {
                small.cross_truth.as_ref()
            } else {
                Some(&small.auto_truth)
            }) else {
                continue;
            };
            for ((name, a), (_, b)) in channels(small, cross).into_iter().zip(channels(large, cross)) {
                let lags: Vec<f64> = truth.window.lags().map(|k| k as f64).collect();
                for (curve, coords, ra, rb) in [
                    ("covariance", &lags, &a.covariance.rms, &b.covariance.rms),
                    ("spectrum", &truth.frequencies, &a.spectrum.rms, &b.spectrum.rms),
                ] {
                    for i in 0..coords.len() {
                        writeln!(
                            w,
                            "{name},{channel},{curve},{},{},{},{},{},{}",
                            fmt_f64(coords[i]),
                            small.n_samples,
                            large.n_samples,
                            fmt_f64(ra[i]),
                            fmt_f64(rb[i]),
                            fmt_f64(ra[i] / rb[i])
                        )?;
                    }
                }
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ManifestChannel<'a> {
    averaged: usize,
    excluded: usize,
    failures: &'a BTreeMap<String, usize>,
    identities: IdentityDeviations,
}

#[derive(Serialize)]
struct ManifestEstimator<'a> {
    name: &'a str,
    auto: ManifestChannel<'a>,
    cross: Option<ManifestChannel<'a>>,
}

#[derive(Serialize)]
struct ManifestSize<'a> {
    n_samples: usize,
    process_seed: u64,
    gap_seed: u64,
    estimators: Vec<ManifestEstimator<'a>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    version: &'static str,
    config: &'a ExperimentConfig,
    sizes: Vec<ManifestSize<'a>>,
    files: Vec<String>,
    threads: usize,
    wall_time_seconds: f64,
    created_unix: u64,
}

fn manifest_channel(c: &ChannelResult) -> ManifestChannel<'_> {
    ManifestChannel {
        averaged: c.averaged,
        excluded: c.excluded,
        failures: &c.failures,
        identities: c.identities,
    }
}

/// Writes the CSV tables and `manifest.json` into `dir`; returns the file
/// names. Only the manifest carries timing information.
pub fn write_result(result: &ExperimentResult, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["auto_covariance.csv".to_string(), "auto_spectrum.csv".to_string()];
    write_covariance_table(&dir.join(&files[0]), result, false)?;
    write_spectrum_table(&dir.join(&files[1]), result, false)?;
    if result.config.cross_window.is_some() {
        write_covariance_table(&dir.join("cross_covariance.csv"), result, true)?;
        write_spectrum_table(&dir.join("cross_spectrum.csv"), result, true)?;
        files.extend(["cross_covariance.csv".into(), "cross_spectrum.csv".into()]);
    }
    let has_residual = result.sizes.iter().any(|s| {
        s.estimators
            .iter()
            .any(|e| e.auto.residual.is_some() || e.cross.as_ref().is_some_and(|c| c.residual.is_some()))
    });
    if has_residual {
        write_residual_table(&dir.join("residual.csv"), result)?;
        files.push("residual.csv".into());
    }
    if result.config.experiment == ExperimentKind::Rms && result.sizes.len() > 1 {
        write_rms_ratio_table(&dir.join("rms_ratio.csv"), result)?;
        files.push("rms_ratio.csv".into());
    }
    let manifest = Manifest {
        schema: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        config: &result.config,
        sizes: result
            .sizes
            .iter()
            .map(|s| ManifestSize {
                n_samples: s.n_samples,
                process_seed: s.process_seed,
                gap_seed: s.gap_seed,
                estimators: s
                    .estimators
                    .iter()
                    .map(|e| ManifestEstimator {
                        name: &e.name,
                        auto: manifest_channel(&e.auto),
                        cross: e.cross.as_ref().map(manifest_channel),
                    })
                    .collect(),
            })
            .collect(),
        files: files.clone(),
        threads: result.threads,
        wall_time_seconds: result.wall_time_seconds,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    files.push("manifest.json".into());
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white_config(realizations: usize) -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            name: None,
            experiment: ExperimentKind::Bias,
            process: ProcessSpec::moving_average(vec![1.0], 8.0, 4.0),
            gaps: GapModelSpec::none(),
            n_samples: vec![40],
            n_realizations: realizations,
            window: LagWindow::single(0),
            cross_window: None,
            estimators: vec!["valid_only_raw".into(), "valid_only_corrected".into()],
            output_dir: None,
            base_seed: 3,
            lomb_scargle_alpha: None,
            condition_threshold: None,
        }
    }

    #[test]
    fn compensated_sum() {
        let mut c = Compensated::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            c.add(x);
        }
        assert_eq!(c.value(), 2.0);
    }

    #[test]
    fn single_gap_free_run_is_bessel() {
        let r = run_bias_experiment(&white_config(1)).unwrap();
        let size = &r.sizes[0];
        let raw = size.estimator("valid_only_raw").unwrap().auto.covariance.mean[0];
        let fixed = size.estimator("valid_only_corrected").unwrap().auto.covariance.mean[0];
        assert!((fixed - raw * 40.0 / 39.0).abs() < 1e-12 * raw);
        assert_eq!(size.estimators[0].auto.averaged, 1);
    }

    #[test]
    fn config_validation() {
        let mut c = white_config(1);
        c.schema = 2;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = white_config(1);
        c.n_realizations = 0;
        assert!(c.validate().is_err());
        let mut c = white_config(1);
        c.estimators.push("kalman".into());
        assert!(matches!(c.validate(), Err(Error::Unknown { .. })));
        let mut c = white_config(1);
        c.window = LagWindow::new(-39, 39).unwrap();
        assert!(matches!(c.validate(), Err(Error::SingularWindow { .. })));
        let c = white_config(1);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"schema":1}"#),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn exclusions_are_counted() {
        let mut c = white_config(20);
        c.gaps = GapModelSpec::bernoulli(0.05);
        c.window = LagWindow::new(-3, 3).unwrap();
        let r = run_bias_experiment(&c).unwrap();
        for e in &r.sizes[0].estimators {
            assert_eq!(e.auto.averaged + e.auto.excluded, 20);
            assert_eq!(e.auto.failures.values().sum::<usize>(), e.auto.excluded);
        }
        assert!(r.sizes[0].estimators[0].auto.excluded > 0);
    }
}
