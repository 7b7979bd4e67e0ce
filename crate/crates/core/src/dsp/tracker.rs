//! Serial receiver state: averaging, peak tracking, Jones pairing.
//!
//! Matched filtering is independent per sweep and runs in parallel; every
//! filtered response is then folded into [`TrackerState`] in sweep order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::average::SlidingAverage;
use super::capture::SweepCapture;
use super::matched_filter::{derotate, ImpulseResponse, MatchedFilter};
use super::observation::{assemble_jones, column_jones, ObservationFlags, RepeaterObservation};
use super::peaks::{detect_around, estimate_delay_subsample};
use super::phase::PhaseUnwrapper;
use super::snr::estimate_snr;
use crate::error::{Error, Result};
use crate::waveform::{generate_sweep, Polarization, SweepConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    /// Same-polarization sweeps in the sliding coherent average.
    pub average: usize,
    /// Minimum peak height over the median floor, dB.
    pub threshold_db: f64,
    /// Search half-width around the tracked delay, bins.
    pub search_radius: usize,
    /// Exponential smoothing factor of the tracked delay.
    pub smoothing: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            average: 1,
            threshold_db: 10.0,
            search_radius: 3,
            smoothing: 0.1,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.average == 0 {
            return Err(Error::config("receiver.average", "must be >= 1"));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::config("receiver.smoothing", "must lie in (0, 1]"));
        }
        if self.search_radius == 0 {
            return Err(Error::config("receiver.search_radius", "must be >= 1"));
        }
        if !self.threshold_db.is_finite() {
            return Err(Error::config("receiver.threshold_db", "must be finite"));
        }
        Ok(())
    }
}

/// Everything the ordered fold carries from sweep to sweep.
#[derive(Clone, Debug)]
pub struct TrackerState {
    /// Tracked delay per repeater, fractional bins.
    pub nominal_bins: Vec<f64>,
    /// Per repeater, per Jones element (row-major) unwrapped phase of paired
    /// records.
    pub unwrap: Vec<[PhaseUnwrapper; 4]>,
    averagers: [SlidingAverage; 2],
    last_sweep: Option<u64>,
    pending: Option<Vec<RepeaterObservation>>,
}

impl TrackerState {
    pub fn new(nominal_bins: Vec<f64>, average: usize) -> Self {
        let k = nominal_bins.len();
        TrackerState {
            nominal_bins,
            unwrap: vec![[PhaseUnwrapper::new(); 4]; k],
            averagers: [SlidingAverage::new(average), SlidingAverage::new(average)],
            last_sweep: None,
            pending: None,
        }
    }
}

pub struct Receiver {
    cfg: SweepConfig,
    rx: ReceiverConfig,
    filter: MatchedFilter,
    state: TrackerState,
    held: Option<SweepCapture>,
}

impl Receiver {
    /// `expected_delays` are the initial round-trip delays, seconds.
    pub fn new(cfg: &SweepConfig, expected_delays: &[f64], rx: ReceiverConfig) -> Result<Self> {
        cfg.validate()?;
        rx.validate()?;
        let n = cfg.samples_per_sweep();
        let bins: Vec<f64> = expected_delays.iter().map(|d| d * cfg.sample_rate).collect();
        if let Some(i) = bins.iter().position(|&b| !(b >= 0.0 && b < n as f64)) {
            return Err(Error::config(
                format!("receiver.expected_delays[{i}]"),
                "must lie in [0, sweep_period)",
            ));
        }
        let reference = generate_sweep(cfg, 0)?;
        Ok(Receiver {
            cfg: cfg.clone(),
            filter: MatchedFilter::new(cfg, &reference)?,
            state: TrackerState::new(bins, rx.average),
            rx,
            held: None,
        })
    }

    pub fn filter(&self) -> &MatchedFilter {
        &self.filter
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn repeaters(&self) -> usize {
        self.state.nominal_bins.len()
    }

    pub fn push(&mut self, capture: SweepCapture) -> Result<Vec<RepeaterObservation>> {
        self.push_batch(vec![capture])
    }

    /// Filters a batch in parallel (each capture paired with its successor),
    /// then folds the responses in order. The last capture is held back
    /// until its successor or [`Receiver::finish`] arrives.
    pub fn push_batch(&mut self, captures: Vec<SweepCapture>) -> Result<Vec<RepeaterObservation>> {
        let mut all: Vec<SweepCapture> = Vec::with_capacity(captures.len() + 1);
        all.extend(self.held.take());
        all.extend(captures);
        let Some(last) = all.pop() else {
            return Ok(Vec::new());
        };
        let filter = &self.filter;
        let irs: Vec<Result<ImpulseResponse>> = (0..all.len())
            .into_par_iter()
            .map(|i| filter.filter(&all[i], Some(all.get(i + 1).unwrap_or(&last))))
            .collect();
        self.held = Some(last);
        let mut out = Vec::new();
        for ir in irs {
            out.extend(self.push_response(ir?)?);
        }
        Ok(out)
    }

    /// Processes the held capture (circularly) and flushes any unpaired
    /// column.
    pub fn finish(&mut self) -> Result<Vec<RepeaterObservation>> {
        let mut out = Vec::new();
        if let Some(c) = self.held.take() {
            let ir = self.filter.circular(&c)?;
            out.extend(self.push_response(ir)?);
        }
        if let Some(p) = self.state.pending.take() {
            out.extend(p);
        }
        Ok(out)
    }

    /// Folds one filtered response into the tracker. Responses must arrive
    /// in increasing sweep order.
    pub fn push_response(&mut self, ir: ImpulseResponse) -> Result<Vec<RepeaterObservation>> {
        let m = ir.sweep_index;
        let mut out = Vec::new();
        let st = &mut self.state;
        let gap = match st.last_sweep {
            Some(l) if m <= l => {
                return Err(Error::Malformed(format!("sweep {m} arrived after sweep {l}")));
            }
            Some(l) => m != l + 1,
            None => false,
        };
        st.last_sweep = Some(m);
        if gap {
            st.averagers.iter_mut().for_each(|a| a.clear());
            out.extend(st.pending.take().unwrap_or_default());
            st.unwrap.iter_mut().for_each(|u| u.iter_mut().for_each(|p| p.reset()));
        }
        let pol = ir.launch_pol;
        let avg = st.averagers[pol.index()].push(ir)?;
        let peaks = detect_around(&avg, &st.nominal_bins, self.rx.search_radius, self.rx.threshold_db);
        let bins: Vec<usize> = peaks.iter().map(|p| p.bin).collect();
        let snr = estimate_snr(&avg, &bins);
        let n = avg.len() as f64;
        let fs = self.cfg.sample_rate;
        let t_centre = avg.t0() + self.cfg.sweep_period / 2.0;

        let mut records = Vec::with_capacity(peaks.len());
        for (k, peak) in peaks.iter().enumerate() {
            let mut flags = ObservationFlags::COLUMN_ONLY;
            if peak.missing {
                flags.insert(ObservationFlags::MISSING);
            }
            if !avg.aligned {
                flags.insert(ObservationFlags::UNALIGNED);
            }
            let est = snr.per_peak[k];
            if est.low_confidence {
                flags.insert(ObservationFlags::LOW_CONFIDENCE);
            }
            if est.clamped {
                flags.insert(ObservationFlags::SNR_CLAMPED);
            }
            if gap {
                flags.insert(ObservationFlags::DISCONTINUITY);
            }
            let delay = match estimate_delay_subsample(&avg, peak.bin) {
                Ok(d) => d,
                Err(_) => {
                    flags.insert(ObservationFlags::EDGE);
                    peak.bin as f64 / fs
                }
            };
            let nominal = st.nominal_bins[k];
            if !peak.missing {
                st.nominal_bins[k] = nominal + self.rx.smoothing * (delay * fs - nominal);
            }
            let raw = avg.column(peak.bin);
            let col = [
                derotate(raw[0], peak.bin, self.cfg.if_center, fs),
                derotate(raw[1], peak.bin, self.cfg.if_center, fs),
            ];
            let p = (col[0].norm_sqr() + col[1].norm_sqr()) / (n * n);
            records.push(RepeaterObservation {
                repeater: k + 1,
                sweep_index: m,
                launch_pol: pol,
                timestamp: t_centre,
                jones: column_jones(pol, col),
                delay_est: delay,
                nominal_delay: nominal / fs,
                intensity_db: if p > 0.0 { (10.0 * p.log10()).max(-300.0) } else { -300.0 },
                snr_db: est.snr_db,
                measurement_bandwidth_hz: snr.measurement_bandwidth_hz,
                flags,
            });
        }

        match pol {
            Polarization::X => {
                out.extend(st.pending.take().unwrap_or_default());
                st.pending = Some(records);
            }
            Polarization::Y => match st.pending.take() {
                Some(mut xs) if xs.first().is_some_and(|x| x.sweep_index + 1 == m) => {
                    for (x, y) in xs.iter_mut().zip(records.iter_mut()) {
                        let j = assemble_jones(x.column(), y.column());
                        let mid = 0.5 * (x.timestamp + y.timestamp);
                        for r in [&mut *x, &mut *y] {
                            r.jones = j;
                            r.timestamp = mid;
                            r.flags.0 &= !ObservationFlags::COLUMN_ONLY.0;
                        }
                        let e = j.elements();
                        let u = &mut st.unwrap[y.repeater - 1];
                        for (ui, z) in u.iter_mut().zip(e.iter()) {
                            if *z != Complex64::new(0.0, 0.0) {
                                ui.push(z.arg());
                            }
                        }
                    }
                    out.extend(xs);
                    out.extend(records);
                }
                other => {
                    out.extend(other.unwrap_or_default());
                    out.extend(records);
                }
            },
        }
        Ok(out)
    }
}

/// Runs a receiver over a complete capture sequence.
pub fn process_captures(
    cfg: &SweepConfig,
    expected_delays: &[f64],
    rx: ReceiverConfig,
    captures: Vec<SweepCapture>,
) -> Result<Vec<RepeaterObservation>> {
    let mut r = Receiver::new(cfg, expected_delays, rx)?;
    let mut out = r.push_batch(captures)?;
    out.extend(r.finish()?);
    Ok(out)
}
