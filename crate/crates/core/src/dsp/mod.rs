//! Coherent receiver: matched filtering, peak tracking, Jones assembly,
//! phase, delay and SNR estimation.

mod average;
pub(crate) mod capture;
mod matched_filter;
mod observation;
mod peaks;
mod phase;
pub mod records;
mod snr;
mod tracker;

pub use average::{coherent_average, power_average, SlidingAverage};
pub use capture::SweepCapture;
pub use matched_filter::{analytic_signal, circular_xcorr, derotate, matched_filter, ImpulseResponse, MatchedFilter};
pub use observation::{assemble_jones, column_jones, ObservationFlags, RepeaterObservation};
pub use peaks::{detect_around, detect_peaks, estimate_delay_subsample, median, parabolic_offset, Peak, SEARCH_RADIUS};
pub use phase::{
    column_phase_series, differential_phase, phase_series, unwrap_phases, wrap, PhaseConvention, PhaseSeries,
    PhaseUnwrapper,
};
pub use snr::{estimate_snr, SnrEstimate, SnrReport, MIN_NOISE_BINS, SNR_CLAMP_DB};
pub use tracker::{process_captures, Receiver, ReceiverConfig, TrackerState};
