use crate::error::{Error, Result};
use crate::waveform::Polarization;

/// One sweep period of digitized two-channel heterodyne samples.
///
/// Channels hold raw ADC codes (right-justified, `adc_bits` wide) so that
/// captures survive serialization bit-exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepCapture {
    pub sweep_index: u64,
    pub launch_pol: Polarization,
    /// Capture start time, ns.
    pub timestamp_ns: u64,
    pub adc_bits: u32,
    /// `[X-receive, Y-receive]`.
    pub channels: [Vec<i16>; 2],
}

impl SweepCapture {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    /// Capture start, seconds.
    pub fn t0(&self) -> f64 {
        self.timestamp_ns as f64 * 1e-9
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels[0].len() != self.channels[1].len() {
            return Err(Error::LengthMismatch {
                expected: self.channels[0].len(),
                actual: self.channels[1].len(),
            });
        }
        if !(2..=16).contains(&self.adc_bits) {
            return Err(Error::config("sweep.adc_bits", "must lie in [2, 16]"));
        }
        Ok(())
    }

    /// Channel `c` scaled to `[-1, 1)`.
    pub fn channel_f64(&self, c: usize) -> Vec<f64> {
        let scale = 1.0 / (1u32 << (self.adc_bits - 1)) as f64;
        self.channels[c].iter().map(|&v| v as f64 * scale).collect()
    }
}

pub(crate) fn timestamp_ns(sweep_index: u64, sweep_period: f64) -> u64 {
    (sweep_index as f64 * sweep_period * 1e9).round() as u64
}
