//! Products computed from observation streams: phase and frequency noise
//! spectra, spectrograms, band power, delay drift and span movement.

pub mod export;
mod movement;
mod psd;
mod spectrogram;

pub use movement::{
    delay_series, pearson, span_movement_report, AdjacentFlag, DelaySeries, MovementConfig, MovementReport,
    SpanMovement, MIN_MOVEMENT_SAMPLES,
};
pub use psd::{
    band_power, detrend_linear, frequency_noise_psd, frequency_noise_psd_raw, hann, psd_ratio_db, runs_between, welch,
    welch_segmented, BandPower, PsdReport, Welch, WelchConfig, MIN_SEGMENT,
};
pub use spectrogram::{spectrogram, spectrogram_raw, SpectrogramConfig, SpectrogramGrid, FLOOR_DB};
