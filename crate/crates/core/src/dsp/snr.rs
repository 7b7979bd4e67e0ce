use serde::{Deserialize, Serialize};

use super::matched_filter::ImpulseResponse;
use super::peaks::{circular_distance, median};

/// Reported when no noise is measurable.
pub const SNR_CLAMP_DB: f64 = 99.0;
/// Fewer clean noise bins than this marks an estimate low-confidence.
pub const MIN_NOISE_BINS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub snr_db: f64,
    pub clamped: bool,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub per_peak: Vec<SnrEstimate>,
    /// Median noise power per bin.
    pub noise_floor: f64,
    pub noise_bins: usize,
    /// Effective bandwidth of the averaging configuration, `1/(W·T)`, Hz.
    pub measurement_bandwidth_hz: f64,
}

/// `10·log10(|peak|² / median |noise|²)` with power summed over both receive
/// channels. Noise bins lie at least `5/B` (circularly) from every peak.
pub fn estimate_snr(ir: &ImpulseResponse, peaks: &[usize]) -> SnrReport {
    let power = ir.power();
    let n = power.len();
    let guard = (5.0 * ir.sample_rate / ir.sweep_bandwidth).ceil() as usize;
    let noise: Vec<f64> = (0..n)
        .filter(|&i| peaks.iter().all(|&p| circular_distance(i, p, n) >= guard))
        .map(|i| power[i])
        .collect();
    let floor = median(&noise);
    let low_confidence = noise.len() < MIN_NOISE_BINS;
    let per_peak = peaks
        .iter()
        .map(|&p| {
            let s = power.get(p).copied().unwrap_or(0.0);
            let (snr_db, clamped) = if floor > 0.0 && s > 0.0 {
                let v = 10.0 * (s / floor).log10();
                (v.clamp(-SNR_CLAMP_DB, SNR_CLAMP_DB), v.abs() > SNR_CLAMP_DB)
            } else if s > 0.0 {
                (SNR_CLAMP_DB, true)
            } else {
                (-SNR_CLAMP_DB, true)
            };
            SnrEstimate {
                snr_db,
                clamped,
                low_confidence,
            }
        })
        .collect();
    SnrReport {
        per_peak,
        noise_floor: floor,
        noise_bins: noise.len(),
        measurement_bandwidth_hz: 1.0 / (ir.averaged.max(1) as f64 * ir.sweep_period()),
    }
}
