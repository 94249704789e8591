use thiserror::Error;

use crate::types::LagWindow;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {values} values but {weights} weights")]
    LengthMismatch { values: usize, weights: usize },

    #[error("weight at index {index} is {value}, weights must be finite and non-negative")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weight at index {index} is {value}, binary mode requires 0 or 1")]
    NonBinaryWeight { index: usize, value: f64 },

    #[error("value at valid index {index} is not finite")]
    NonFiniteValue { index: usize },

    #[error("series has no valid samples (total weight is zero)")]
    AllInvalid,

    #[error("series is empty")]
    Empty,

    #[error("sampling interval must be positive and finite, got {0}")]
    NonPositiveDt(f64),

    #[error("sampling intervals differ: {0} vs {1}")]
    DtMismatch(f64, f64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid lag window {k1}:{k2}")]
    InvalidWindow { k1: i64, k2: i64 },

    #[error("lag window {window} exceeds the admissible range {min}..={max}")]
    WindowOutOfRange { window: LagWindow, min: i64, max: i64 },

    #[error("insufficient pair coverage: no valid pairs at lags {lags:?}")]
    InsufficientPairCoverage { lags: Vec<i64> },

    #[error("lag window {window} is singular for the mapping matrix, need {min} <= k1 <= k2 <= {max}")]
    SingularWindow { window: LagWindow, min: i64, max: i64 },

    #[error("linear system is numerically singular (condition estimate {condition:e} > {threshold:e})")]
    IllConditioned { condition: f64, threshold: f64 },

    #[error("weight fingerprint mismatch: estimate and matrix were built from different weights")]
    FingerprintMismatch,

    #[error("lag window mismatch: {expected} vs {actual}")]
    WindowMismatch { expected: LagWindow, actual: LagWindow },

    #[error("estimate kind mismatch")]
    KindMismatch,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance window {window} does not cover lags {min}..={max} with valid pairs; enable truncation to treat them as zero")]
    WindowTooNarrow { window: LagWindow, min: i64, max: i64 },

    #[error("need at least {needed} valid samples, found {found}")]
    TooFewValidSamples { needed: usize, found: usize },

    #[error("frequency {0} is not allowed here, frequencies must be positive")]
    InvalidFrequency(f64),

    #[error("validity probability must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("offset correction applied twice")]
    AlreadyCorrected,

    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("series length {n} too small, need more than {min}")]
    SeriesTooShort { n: usize, min: usize },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("bad config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used by the command line driver for
    /// machine-parsable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::NegativeWeight { .. } => "negative-weight",
            Error::NonBinaryWeight { .. } => "non-binary-weight",
            Error::NonFiniteValue { .. } => "non-finite-value",
            Error::AllInvalid => "all-invalid",
            Error::Empty => "empty",
            Error::NonPositiveDt(_) => "non-positive-dt",
            Error::DtMismatch(..) => "dt-mismatch",
            Error::Parse { .. } => "parse",
            Error::InvalidWindow { .. } => "invalid-window",
            Error::WindowOutOfRange { .. } => "window-out-of-range",
            Error::InsufficientPairCoverage { .. } => "insufficient-pair-coverage",
            Error::SingularWindow { .. } => "singular-window",
            Error::IllConditioned { .. } => "ill-conditioned",
            Error::FingerprintMismatch => "fingerprint-mismatch",
            Error::WindowMismatch { .. } => "window-mismatch",
            Error::KindMismatch => "kind-mismatch",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::WindowTooNarrow { .. } => "window-too-narrow",
            Error::TooFewValidSamples { .. } => "too-few-valid-samples",
            Error::InvalidFrequency(_) => "invalid-frequency",
            Error::AlphaOutOfRange(_) => "alpha-out-of-range",
            Error::AlreadyCorrected => "already-corrected",
            Error::InvalidProbability(_) => "invalid-probability",
            Error::InvalidProcess(_) => "invalid-process",
            Error::SeriesTooShort { .. } => "series-too-short",
            Error::Unknown { .. } => "unknown-name",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
