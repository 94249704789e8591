//! Bias-free mean, variance, covariance and spectral estimation for
//! equidistantly sampled signals with invalid samples.
//!
//! Invalid samples carry weight zero and are masked out of every sum rather
//! than interpolated. Covariances are normalised by the number of valid
//! pairs per lag, and the bias that comes from subtracting an estimated
//! mean is removed exactly by inverting a mapping matrix built from the
//! weights alone.
//!
//! ```
//! use gapcov::{autocovariance_fft, build_auto_matrix, correct_covariance, covariance_to_spectrum};
//! use gapcov::{CorrectionOptions, GappySeries, LagWindow};
//!
//! let series = GappySeries::binary(
//!     vec![1.0, 3.0, -1.0, 2.0, 5.0, 4.0, -1.0, 0.0, 2.0, 1.0],
//!     vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0],
//!     1.0,
//! )?;
//! let window = LagWindow::new(-2, 2)?;
//! let raw = autocovariance_fft(&series, window)?;
//! let matrix = build_auto_matrix(series.weights(), window)?;
//! let fixed = correct_covariance(&raw, &matrix, &CorrectionOptions::default())?.estimate;
//! let spectrum = covariance_to_spectrum(&fixed);
//! assert_eq!(spectrum.values().len(), 5);
//! # Ok::<(), gapcov::Error>(())
//! ```

pub mod baselines;
pub mod correction;
pub mod covariance;
pub mod error;
mod fft;
pub mod harness;
pub mod io;
mod linalg;
pub mod moments;
pub mod simgen;
pub mod spectrum;
pub mod types;

pub use rustfft::num_complex::Complex64;

pub use baselines::{
    interpolated_covariance_spectrum, interpolated_cross_spectrum, lomb_scargle, lomb_scargle_grid,
    lomb_scargle_offset, lomb_scargle_offset_correct, sample_and_hold, LombScargleSpectrum,
};
pub use correction::{
    build_auto_matrix, build_auto_matrix_with, build_cross_matrix, build_cross_matrix_with, correct_covariance,
    expected_auto_covariance, expected_cross_covariance, predict_expected_covariance, Assembly, Corrected,
    CorrectionOptions,
};
pub use covariance::{autocovariance_direct, autocovariance_fft, crosscovariance_direct, crosscovariance_fft};
pub use error::{Error, Result};
pub use moments::{corrected_variance, mean_estimator_variance, weighted_mean, weighted_variance};
pub use spectrum::{covariance_to_spectrum, spectrum_to_covariance};
pub use types::{
    CovarianceEstimate, EstimateKind, Fingerprint, GappySeries, LagWindow, MappingMatrix, MomentSummary,
    SpectrumEstimate,
};
