use super::matched_filter::ImpulseResponse;
use crate::error::{Error, Result};

/// Default search half-width around an expected delay, bins.
pub const SEARCH_RADIUS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub bin: usize,
    /// Peak power over the median floor, dB.
    pub quality_db: f64,
    /// Expected peak not found above the threshold.
    pub missing: bool,
}

/// Median of a power profile.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

fn quality(p: f64, floor: f64) -> f64 {
    if floor > 0.0 {
        10.0 * (p / floor).log10()
    } else if p > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Finds repeater peaks.
///
/// With `expected` delays (seconds), searches ±[`SEARCH_RADIUS`] bins around
/// each and returns one entry per expected delay, flagged `missing` when the
/// best bin is less than `threshold_db` above the median floor. Without, returns
/// every local maximum above the threshold after non-maximum suppression over
/// one resolution cell (`fs/B` bins).
pub fn detect_peaks(ir: &ImpulseResponse, expected: Option<&[f64]>, threshold_db: f64) -> Vec<Peak> {
    match expected {
        Some(delays) => {
            let bins: Vec<f64> = delays.iter().map(|d| d * ir.sample_rate).collect();
            detect_around(ir, &bins, SEARCH_RADIUS, threshold_db)
        }
        None => detect_blind(ir, threshold_db),
    }
}

/// Expected-delay search with centres given in (fractional) bins.
pub fn detect_around(ir: &ImpulseResponse, centres: &[f64], radius: usize, threshold_db: f64) -> Vec<Peak> {
    let power = ir.power();
    let floor = median(&power);
    let n = power.len();
    centres
        .iter()
        .map(|&c| {
            let c = c.round().clamp(0.0, (n - 1) as f64) as usize;
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(n - 1);
            let bin = (lo..=hi)
                .max_by(|&a, &b| power[a].total_cmp(&power[b]))
                .unwrap_or(c);
            let q = quality(power[bin], floor);
            Peak {
                bin,
                quality_db: q,
                missing: !(q >= threshold_db),
            }
        })
        .collect()
}

fn detect_blind(ir: &ImpulseResponse, threshold_db: f64) -> Vec<Peak> {
    let power = ir.power();
    let n = power.len();
    if n < 3 {
        return Vec::new();
    }
    let floor = median(&power);
    let mut cands: Vec<usize> = (0..n)
        .filter(|&i| {
            let l = power[(i + n - 1) % n];
            let r = power[(i + 1) % n];
            power[i] >= l && power[i] > r && quality(power[i], floor) >= threshold_db
        })
        .collect();
    cands.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
    let radius = (ir.sample_rate / ir.sweep_bandwidth).ceil() as usize;
    let mut kept: Vec<usize> = Vec::new();
    for c in cands {
        if kept.iter().all(|&k| circular_distance(k, c, n) > radius) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|bin| Peak {
            bin,
            quality_db: quality(power[bin], floor),
            missing: false,
        })
        .collect()
}

pub(crate) fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Sub-sample peak offset in bins from a three-point parabola through
/// `|bins|` at `bin − 1, bin, bin + 1`; in `(−0.5, 0.5)`.
pub fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.499_999, 0.499_999)
}

/// Delay in seconds of the peak near `bin`, refined by parabolic
/// interpolation on the magnitude.
pub fn estimate_delay_subsample(ir: &ImpulseResponse, bin: usize) -> Result<f64> {
    let n = ir.len();
    if bin == 0 || bin + 1 >= n {
        return Err(Error::EdgePeak { bin, len: n });
    }
    let mag = |i: usize| (ir.bins[0][i].norm_sqr() + ir.bins[1][i].norm_sqr()).sqrt();
    let off = parabolic_offset(mag(bin - 1), mag(bin), mag(bin + 1));
    Ok((bin as f64 + off) / ir.sample_rate)
}
