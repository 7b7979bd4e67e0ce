use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::observation::{ObservationFlags, RepeaterObservation};
use crate::waveform::Polarization;

/// How a scalar phase is read from a Jones matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// Phase of the element that is largest in the first accepted sample.
    #[default]
    LargestElement,
    /// Half the phase of `det J` (common phase of the matrix).
    Determinant,
}

/// Streaming unwrapper: successive outputs differ by at most π.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseUnwrapper {
    last: Option<f64>,
}

impl PhaseUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, wrapped: f64) -> f64 {
        let out = match self.last {
            None => wrapped,
            Some(prev) => prev + wrap(wrapped - prev),
        };
        self.last = Some(out);
        out
    }

    pub fn last(&self) -> Option<f64> {
        self.last
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}

/// Wraps into `(−π, π]`.
pub fn wrap(x: f64) -> f64 {
    let y = x - TAU * ((x + PI) / TAU).floor();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

pub fn unwrap_phases(wrapped: &[f64]) -> Vec<f64> {
    let mut u = PhaseUnwrapper::new();
    wrapped.iter().map(|&w| u.push(w)).collect()
}

/// Unwrapped phase of one repeater, relative to its first accepted sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeries {
    pub repeater: usize,
    pub sweep_indices: Vec<u64>,
    /// Seconds.
    pub times: Vec<f64>,
    /// Radians.
    pub values: Vec<f64>,
    /// Sample indices where unwrapping restarted after a gap.
    pub resets: Vec<usize>,
    /// Nominal sample rate, Hz.
    pub sample_rate: f64,
}

impl PhaseSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Contiguous runs between resets, as index ranges.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut cuts: Vec<usize> = self.resets.iter().copied().filter(|&r| r > 0 && r < self.len()).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut out = Vec::new();
        let mut start = 0;
        for c in cuts {
            out.push(start..c);
            start = c;
        }
        if start < self.len() {
            out.push(start..self.len());
        }
        out
    }
}

fn accepted(o: &RepeaterObservation) -> bool {
    !o.flags.contains(ObservationFlags::MISSING) && !o.flags.contains(ObservationFlags::UNALIGNED)
}

/// Phase series of repeater `k` from full-Jones pairs (one sample per pair,
/// sample rate `1/(2T)`). Gaps in the pair sequence restart unwrapping and
/// are listed in `resets`.
pub fn phase_series(
    observations: &[RepeaterObservation],
    k: usize,
    convention: PhaseConvention,
    sweep_period: f64,
) -> PhaseSeries {
    let pairs = observations
        .iter()
        .filter(|o| o.repeater == k && o.is_paired() && o.launch_pol == Polarization::Y && accepted(o));
    let mut series = PhaseSeries {
        repeater: k,
        sample_rate: 1.0 / (2.0 * sweep_period),
        ..Default::default()
    };
    let mut reference: Option<(usize, Complex64)> = None;
    let mut unwrapper = PhaseUnwrapper::new();
    let mut prev: Option<u64> = None;
    for o in pairs {
        let value = match convention {
            PhaseConvention::LargestElement => {
                let e = o.jones.elements();
                let (idx, r) = *reference.get_or_insert_with(|| {
                    let i = (0..4).max_by(|&a, &b| e[a].norm().total_cmp(&e[b].norm())).unwrap();
                    (i, e[i])
                });
                (e[idx] * r.conj()).arg()
            }
            PhaseConvention::Determinant => {
                let d = o.jones.det();
                let (_, r) = *reference.get_or_insert((0, d));
                (d * r.conj()).arg()
            }
        };
        let gap = match prev {
            Some(p) => o.sweep_index != p + 2 || o.flags.contains(ObservationFlags::DISCONTINUITY),
            None => false,
        };
        if gap {
            unwrapper.reset();
            series.resets.push(series.values.len());
        }
        let mut v = unwrapper.push(value);
        if convention == PhaseConvention::Determinant {
            v /= 2.0;
        }
        series.values.push(v);
        series.times.push(o.timestamp);
        series.sweep_indices.push(o.sweep_index);
        prev = Some(o.sweep_index);
    }
    series
}

/// Phase from single columns at the full sweep rate `1/T`. Each launch
/// polarization is referenced to its own first sample through the element
/// of its column that is largest there.
pub fn column_phase_series(observations: &[RepeaterObservation], k: usize, sweep_period: f64) -> PhaseSeries {
    let mut series = PhaseSeries {
        repeater: k,
        sample_rate: 1.0 / sweep_period,
        ..Default::default()
    };
    let mut reference: [Option<(usize, Complex64)>; 2] = [None, None];
    let mut unwrapper = PhaseUnwrapper::new();
    let mut prev: Option<u64> = None;
    for o in observations.iter().filter(|o| o.repeater == k && accepted(o)) {
        let col = o.column();
        let (idx, r) = *reference[o.launch_pol.index()].get_or_insert_with(|| {
            let i = if col[0].norm() >= col[1].norm() { 0 } else { 1 };
            (i, col[i])
        });
        let value = (col[idx] * r.conj()).arg();
        if let Some(p) = prev {
            if o.sweep_index != p + 1 || o.flags.contains(ObservationFlags::DISCONTINUITY) {
                unwrapper.reset();
                series.resets.push(series.values.len());
            }
        }
        series.values.push(unwrapper.push(value));
        series.times.push(o.sweep_index as f64 * sweep_period + sweep_period / 2.0);
        series.sweep_indices.push(o.sweep_index);
        prev = Some(o.sweep_index);
    }
    series
}

/// `Δφ_k = φ_k − φ_{k−1}` on samples common to both series (matched by
/// sweep index); `Δφ_1 = φ_1`. Input is ordered by repeater.
pub fn differential_phase(series: &[PhaseSeries]) -> Vec<PhaseSeries> {
    let mut out = Vec::with_capacity(series.len());
    for (i, cur) in series.iter().enumerate() {
        if i == 0 {
            out.push(cur.clone());
            continue;
        }
        let prev = &series[i - 1];
        let mut d = PhaseSeries {
            repeater: cur.repeater,
            sample_rate: cur.sample_rate,
            ..Default::default()
        };
        let reset_at = |s: &PhaseSeries, j: usize| s.resets.binary_search(&j).is_ok();
        let (mut a, mut b) = (0, 0);
        let mut pending_reset = false;
        while a < cur.len() && b < prev.len() {
            let (ma, mb) = (cur.sweep_indices[a], prev.sweep_indices[b]);
            if reset_at(cur, a) && ma <= mb || reset_at(prev, b) && mb <= ma {
                pending_reset = true;
            }
            if ma < mb {
                a += 1;
            } else if mb < ma {
                b += 1;
            } else {
                if pending_reset && !d.values.is_empty() {
                    d.resets.push(d.values.len());
                }
                pending_reset = false;
                d.values.push(cur.values[a] - prev.values[b]);
                d.times.push(cur.times[a]);
                d.sweep_indices.push(ma);
                a += 1;
                b += 1;
            }
        }
        out.push(d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::Jones;

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-PI) - PI).abs() < 1e-12);
        assert!((wrap(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap(-7.0) - (-7.0 + TAU)).abs() < 1e-12);
    }

    #[test]
    fn unwrap_reproduces_ramp() {
        let ramp: Vec<f64> = (0..1000).map(|i| 0.01 + 2.9 * i as f64).collect();
        let wrapped: Vec<f64> = ramp.iter().map(|&x| wrap(x)).collect();
        let u = unwrap_phases(&wrapped);
        for (a, b) in u.iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    fn obs(k: usize, m: u64, phase: f64) -> RepeaterObservation {
        RepeaterObservation {
            repeater: k,
            sweep_index: m,
            launch_pol: if m % 2 == 0 { Polarization::X } else { Polarization::Y },
            timestamp: m as f64 * 1e-3,
            jones: Jones::rotation(0.2) * Complex64::from_polar(2.0, phase),
            delay_est: 0.0,
            nominal_delay: 0.0,
            intensity_db: 0.0,
            snr_db: 30.0,
            measurement_bandwidth_hz: 1e3,
            flags: ObservationFlags::empty(),
        }
    }

    #[test]
    fn series_is_relative_and_marks_gaps() {
        let mut v = Vec::new();
        for m in (1..40).step_by(2) {
            if m == 21 {
                continue;
            }
            v.push(obs(1, m, 1.0 + 0.5 * m as f64));
        }
        let s = phase_series(&v, 1, PhaseConvention::LargestElement, 1e-3);
        assert_eq!(s.values[0], 0.0);
        assert!((s.values[3] - 3.0).abs() < 1e-12);
        assert_eq!(s.resets, vec![10]);
        assert_eq!(s.sample_rate, 500.0);
        let d = phase_series(&v, 1, PhaseConvention::Determinant, 1e-3);
        assert!((d.values[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn differential_aligns_by_sweep() {
        let a: Vec<_> = (1..20).step_by(2).map(|m| obs(1, m, 0.1 * m as f64)).collect();
        let b: Vec<_> = (5..20).step_by(2).map(|m| obs(2, m, 0.3 * m as f64)).collect();
        let mut all = a;
        all.extend(b);
        let s1 = phase_series(&all, 1, PhaseConvention::LargestElement, 1e-3);
        let s2 = phase_series(&all, 2, PhaseConvention::LargestElement, 1e-3);
        let d = differential_phase(&[s1.clone(), s2]);
        assert_eq!(d[0], s1);
        assert_eq!(d[1].sweep_indices[0], 5);
        // s2 relative to m=5, s1 relative to m=1
        assert!((d[1].values[1] - (0.6 - 0.6)).abs() < 1e-12);
    }
}
