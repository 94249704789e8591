//! Estimators the harness can run, selected by name.

use crate::baselines::{interpolated_covariance_spectrum, interpolated_cross_spectrum, lomb_scargle_grid};
use crate::correction::{
    build_auto_matrix, build_cross_matrix, correct_covariance, expected_auto_covariance, expected_cross_covariance,
    CorrectionOptions,
};
use crate::covariance::{autocovariance_fft, crosscovariance_fft};
use crate::error::{Error, Result};
use crate::spectrum::{covariance_to_spectrum, inverse_transform};
use crate::types::{GappySeries, LagWindow, SpectrumEstimate};

/// Covariance and spectrum of one realization on a common window.
#[derive(Debug, Clone)]
pub struct EstimateCurves {
    pub covariance: Vec<f64>,
    pub spectrum: SpectrumEstimate,
}

impl EstimateCurves {
    fn from_covariance(values: Vec<f64>, spectrum: SpectrumEstimate) -> Self {
        Self {
            covariance: values,
            spectrum,
        }
    }

    /// Lag-domain curve taken as the real part of the inverse transform.
    fn from_spectrum(spectrum: SpectrumEstimate) -> Self {
        let covariance = inverse_transform(&spectrum).into_iter().map(|c| c.re).collect();
        Self { covariance, spectrum }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorOptions {
    pub correction: CorrectionOptions,
    /// Validity probability for the Lomb-Scargle offset; `None` uses `D / N`.
    pub lomb_scargle_alpha: Option<f64>,
}

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the window must satisfy the mapping-matrix range condition.
    fn needs_correctable_window(&self) -> bool {
        false
    }

    fn auto(&self, series: &GappySeries, window: LagWindow) -> Result<EstimateCurves>;

    fn has_cross(&self) -> bool {
        true
    }

    /// `None` when the method has no cross variant.
    fn cross(&self, x: &GappySeries, y: &GappySeries, window: LagWindow) -> Option<Result<EstimateCurves>>;

    /// Expectation of the auto covariance for these weights when the true
    /// covariance on the window is `gamma`, if the method has one in closed
    /// form.
    fn predicted_auto(&self, _weights: &[f64], _window: LagWindow, _gamma: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    fn predicted_cross(
        &self,
        _wx: &[f64],
        _wy: &[f64],
        _window: LagWindow,
        _gamma: &[f64],
    ) -> Option<Result<Vec<f64>>> {
        None
    }
}

struct ValidOnlyRaw;

impl Estimator for ValidOnlyRaw {
    fn name(&self) -> &'static str {
        "valid_only_raw"
    }

    fn auto(&self, series: &GappySeries, window: LagWindow) -> Result<EstimateCurves> {
        let cov = autocovariance_fft(series, window)?;
        let spec = covariance_to_spectrum(&cov);
        Ok(EstimateCurves::from_covariance(cov.values().to_vec(), spec))
    }

    fn cross(&self, x: &GappySeries, y: &GappySeries, window: LagWindow) -> Option<Result<EstimateCurves>> {
        Some(crosscovariance_fft(x, y, window).map(|cov| {
            let spec = covariance_to_spectrum(&cov);
            EstimateCurves::from_covariance(cov.values().to_vec(), spec)
        }))
    }

    fn predicted_auto(&self, weights: &[f64], window: LagWindow, gamma: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(expected_auto_covariance(weights, window, gamma))
    }

    fn predicted_cross(&self, wx: &[f64], wy: &[f64], window: LagWindow, gamma: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(expected_cross_covariance(wx, wy, window, gamma))
    }
}

struct ValidOnlyCorrected {
    options: CorrectionOptions,
}

impl Estimator for ValidOnlyCorrected {
    fn name(&self) -> &'static str {
        "valid_only_corrected"
    }

    fn needs_correctable_window(&self) -> bool {
        true
    }

    fn auto(&self, series: &GappySeries, window: LagWindow) -> Result<EstimateCurves> {
        let raw = autocovariance_fft(series, window)?;
        let matrix = build_auto_matrix(series.weights(), window)?;
        let fixed = correct_covariance(&raw, &matrix, &self.options)?.estimate;
        let spec = covariance_to_spectrum(&fixed);
        Ok(EstimateCurves::from_covariance(fixed.values().to_vec(), spec))
    }

    fn cross(&self, x: &GappySeries, y: &GappySeries, window: LagWindow) -> Option<Result<EstimateCurves>> {
        Some((|| {
            let raw = crosscovariance_fft(x, y, window)?;
            let matrix = build_cross_matrix(x.weights(), y.weights(), window)?;
            let fixed = correct_covariance(&raw, &matrix, &self.options)?.estimate;
            let spec = covariance_to_spectrum(&fixed);
            Ok(EstimateCurves::from_covariance(fixed.values().to_vec(), spec))
        })())
    }
}

/// Sample-and-hold interpolation without deconvolution.
struct SampleAndHold;

impl Estimator for SampleAndHold {
    fn name(&self) -> &'static str {
        "sample_and_hold"
    }

    fn auto(&self, series: &GappySeries, window: LagWindow) -> Result<EstimateCurves> {
        let (cov, spec) = interpolated_covariance_spectrum(series, window)?;
        Ok(EstimateCurves::from_covariance(cov.values().to_vec(), spec))
    }

    fn cross(&self, x: &GappySeries, y: &GappySeries, window: LagWindow) -> Option<Result<EstimateCurves>> {
        Some(
            interpolated_cross_spectrum(x, y, window)
                .map(|(cov, spec)| EstimateCurves::from_covariance(cov.values().to_vec(), spec)),
        )
    }
}

struct LombScargle {
    /// `None`: uncorrected; `Some(alpha)`: offset-corrected with `alpha`
    /// (itself optional, defaulting to `D / N`).
    offset: Option<Option<f64>>,
}

impl Estimator for LombScargle {
    fn name(&self) -> &'static str {
        if self.offset.is_some() {
            "lomb_scargle_corrected"
        } else {
            "lomb_scargle_raw"
        }
    }

    fn auto(&self, series: &GappySeries, window: LagWindow) -> Result<EstimateCurves> {
        lomb_scargle_grid(series, window, self.offset).map(EstimateCurves::from_spectrum)
    }

    fn has_cross(&self) -> bool {
        false
    }

    fn cross(&self, _x: &GappySeries, _y: &GappySeries, _window: LagWindow) -> Option<Result<EstimateCurves>> {
        None
    }
}

type Constructor = fn(&EstimatorOptions) -> Box<dyn Estimator>;

static REGISTRY: [(&str, Constructor); 5] = [
    ("valid_only_raw", |_| Box::new(ValidOnlyRaw)),
    ("valid_only_corrected", |o| {
        Box::new(ValidOnlyCorrected { options: o.correction })
    }),
    ("sample_and_hold", |_| Box::new(SampleAndHold)),
    ("lomb_scargle_raw", |_| Box::new(LombScargle { offset: None })),
    ("lomb_scargle_corrected", |o| {
        Box::new(LombScargle {
            offset: Some(o.lomb_scargle_alpha),
        })
    }),
];

pub fn estimator_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn estimator(name: &str, options: &EstimatorOptions) -> Result<Box<dyn Estimator>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make(options))
        .ok_or_else(|| Error::Unknown {
            kind: "estimator",
            name: name.into(),
        })
}
