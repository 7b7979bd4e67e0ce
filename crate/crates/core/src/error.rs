use thiserror::Error;

use crate::stream::FrameError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `field` is the dotted
    /// config path of the offending value.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("repeater index {index} out of range (cable has {count} repeaters)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("peak at bin {bin} lies on the edge of a {len}-bin response")]
    EdgePeak { bin: usize, len: usize },

    #[error("averaging input mixes launch polarizations")]
    MixedPolarization,

    #[error("noise calibration cannot reach {target_db:.2} dB (achievable bound {bound_db:.2} dB)")]
    CalibrationUnreachable { target_db: f64, bound_db: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("band [{lo}, {hi}] Hz lies outside [0, {nyquist}] Hz")]
    BandOutsideNyquist { lo: f64, hi: f64, nyquist: f64 },

    #[error("frame: {0}")]
    Frame(#[from] FrameError),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EdgePeak { .. } => "edge_peak",
            Error::MixedPolarization => "mixed_polarization",
            Error::CalibrationUnreachable { .. } => "calibration_unreachable",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::BandOutsideNyquist { .. } => "band_outside_nyquist",
            Error::Frame(_) => "frame",
            Error::Malformed(_) => "malformed",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
