use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("size mismatch in {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// The integrator produced a non-finite or oversized coefficient.
    #[error("blow-up in trajectory {trajectory} at step {step} (t = {time}): max |u_j| = {max_abs}")]
    BlowUp {
        trajectory: u64,
        step: u64,
        time: f64,
        max_abs: f64,
    },

    #[error("trajectory does not retain its noise increments; rerun with draw retention enabled")]
    MissingDraws,

    #[error("trajectory was thinned (stride {stride}); per-step states are required")]
    Thinned { stride: usize },

    #[error("level grid [{lo}, {hi}] does not cover the support of the test function on the path range [{need_lo}, {need_hi}]")]
    GridCoverage {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("ensemble failed its stationarity diagnostic: {0}")]
    NotStationary(String),

    #[error("not enough samples: need at least {need}, have {have}")]
    TooFewSamples { need: usize, have: usize },

    #[error("invalid interval set: {0}")]
    InvalidSet(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("oracle check failed: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short name used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::BlowUp { .. } => "blow_up",
            Error::MissingDraws => "missing_draws",
            Error::Thinned { .. } => "thinned",
            Error::GridCoverage { .. } => "grid_coverage",
            Error::NotStationary(_) => "not_stationary",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::InvalidSet(_) => "invalid_set",
            Error::Io { .. } => "io",
            Error::Snapshot(_) => "snapshot",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Validation(_) => "validation",
        }
    }

    /// Offending configuration field, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Config { field, .. } => Some(field),
            _ => None,
        }
    }
}
