//! Received-signal synthesis.
//!
//! Each repeater echo is the probe delayed by the round-trip delay, scaled by
//! the round-trip amplitude, rotated by the round-trip Jones matrix and
//! carrying the perturbation phase plus the self-heterodyne laser residue
//! `φ_L(t) − φ_L(t − τ)`. The probe is periodic, so the first `τ` seconds of
//! capture `m` hold the tail of sweep `m − 1`, which was launched on the other
//! polarization.
//!
//! The chirp phase is advanced with a second-order phasor recurrence in
//! short blocks, re-anchored exactly at every block start.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::cable::CableModel;
use super::laser::{LaserModel, LaserTrack};
use crate::dsp::capture::{timestamp_ns, SweepCapture};
use crate::error::{Error, Result};
use crate::rng;
use crate::waveform::{quantize, Polarization, ProbeWaveform, SweepConfig};

const BLOCK: usize = 256;

/// Receiver front end: a fixed gain ahead of the ADC and the white noise
/// density at its input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEnd {
    pub adc_gain: f64,
    /// One-sided density per receive polarization, 1/Hz relative to launch.
    pub noise_density: f64,
}

impl FrontEnd {
    /// Gain that puts the expected per-channel RMS at `backoff_db` dBFS.
    pub fn for_cable(cable: &CableModel, cfg: &SweepConfig, backoff_db: f64) -> Self {
        let noise_density = cable.noise_density();
        let echo: f64 = (1..=cable.len())
            .map(|k| cable.roundtrip_amplitude(k).expect("in range").powi(2) / 2.0)
            .sum();
        let power = echo + noise_density * cfg.sample_rate / 2.0;
        let adc_gain = if power > 0.0 {
            10f64.powf(backoff_db / 20.0) / power.sqrt()
        } else {
            1.0
        };
        FrontEnd {
            adc_gain,
            noise_density,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Target RMS level at the ADC, dBFS.
    pub adc_backoff_db: f64,
    /// Laser phase track sample rate, Hz.
    pub laser_track_rate: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            adc_backoff_db: -12.0,
            laser_track_rate: 100e3,
        }
    }
}

/// Produces the capture received during `probe`'s sweep period.
///
/// The waveform itself is evaluated analytically from `cfg` at fractional
/// delays; `probe` fixes the sweep index and must match `cfg`'s length.
pub fn propagate(
    cable: &CableModel,
    probe: &ProbeWaveform,
    laser: Option<&LaserTrack>,
    cfg: &SweepConfig,
    frontend: &FrontEnd,
    seed: u64,
) -> Result<SweepCapture> {
    cfg.validate()?;
    let n = cfg.samples_per_sweep();
    if probe.samples.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: probe.samples.len(),
        });
    }
    synthesize(cable, probe.sweep_index, laser, cfg, frontend, seed)
}

fn emission_pol(cfg: &SweepConfig, sweep: i64) -> Polarization {
    cfg.launch_pol(sweep.rem_euclid(2) as u64)
}

pub(crate) fn synthesize(
    cable: &CableModel,
    m: u64,
    laser: Option<&LaserTrack>,
    cfg: &SweepConfig,
    frontend: &FrontEnd,
    seed: u64,
) -> Result<SweepCapture> {
    let n = cfg.samples_per_sweep();
    let period = cfg.sweep_period;
    let dt = 1.0 / cfg.sample_rate;
    let t0 = m as f64 * period;
    let t1 = t0 + period;
    let ramp = cfg.ramp_duration();
    let gamma = cfg.sweep_rate();
    let f_lo = cfg.band().0;

    let mut acc = [vec![0.0f64; n], vec![0.0f64; n]];

    for k in 1..=cable.len() {
        let a = cable.roundtrip_amplitude(k)?;
        if a == 0.0 {
            continue;
        }
        let tau0 = cable.roundtrip_delay(k, t0)?;
        let tau1 = cable.roundtrip_delay(k, t1)?;
        if tau0.max(tau1) >= period || tau0.min(tau1) < 0.0 {
            return Err(Error::config(
                "cable",
                format!("round-trip delay to repeater {k} must lie in [0, sweep_period)"),
            ));
        }
        let ph0 = cable.roundtrip_phase(k, t0)?;
        let ph1 = cable.roundtrip_phase(k, t1)?;
        let jones = cable.roundtrip_jones(k, t0 + period / 2.0)? * a;
        let dtau = (tau1 - tau0) / n as f64;
        let dlocal = dt - dtau;
        let tau_at = |i: f64| tau0 + dtau * i;
        let slow_at = |i: f64| {
            let t = t0 + i * dt;
            let mut s = ph0 + (ph1 - ph0) * i / n as f64;
            if let Some(track) = laser {
                s += track.phase_at(t) - track.phase_at(t - tau_at(i));
            }
            s
        };

        // first sample whose emission time falls in sweep m
        let crossing = (tau0 / dlocal).ceil().max(0.0) as usize;
        let crossing = crossing.min(n);
        let segments = [
            (0usize, crossing, m as i64 - 1, t0 - period),
            (crossing, n, m as i64, t0),
        ];
        for (s0, s1, emitted, origin) in segments {
            if s0 >= s1 {
                continue;
            }
            let w = jones.apply(emission_pol(cfg, emitted).unit_vector());
            let local_at =
                |i: usize| (t0 + i as f64 * dt - tau_at(i as f64) - origin).clamp(0.0, period);
            let mut b0 = s0;
            while b0 < s1 {
                let b1 = (b0 + BLOCK).min(s1);
                let len = b1 - b0;
                let l0 = local_at(b0);
                let sl0 = slow_at(b0 as f64);
                let sl1 = slow_at(b1 as f64);
                let ds = (sl1 - sl0) / len as f64;
                if l0 + dlocal * (len - 1) as f64 <= ramp {
                    let theta0 = TAU * cfg.cycles_at(l0).fract() + sl0;
                    let theta1 = TAU * ((f_lo + gamma * l0) * dlocal).fract() + ds;
                    let theta2 = std::f64::consts::PI * gamma * dlocal * dlocal;
                    let mut p = Complex64::from_polar(1.0, theta0);
                    let mut r = Complex64::from_polar(1.0, theta1 + theta2);
                    let q = Complex64::from_polar(1.0, 2.0 * theta2);
                    for i in b0..b1 {
                        acc[0][i] += (w[0] * p).re;
                        acc[1][i] += (w[1] * p).re;
                        p *= r;
                        r *= q;
                    }
                } else {
                    for i in b0..b1 {
                        let th = TAU * cfg.cycles_at(local_at(i)).fract()
                            + sl0
                            + ds * (i - b0) as f64;
                        let p = Complex64::from_polar(1.0, th);
                        acc[0][i] += (w[0] * p).re;
                        acc[1][i] += (w[1] * p).re;
                    }
                }
                b0 = b1;
            }
        }
    }

    let sigma = (frontend.noise_density * cfg.sample_rate / 2.0).sqrt();
    if sigma > 0.0 {
        let mut r = rng::stream(seed, rng::DOMAIN_ASE, m);
        for ch in acc.iter_mut() {
            for v in ch.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut r);
                *v += sigma * g;
            }
        }
    }

    let mut channels: [Vec<i16>; 2] = [Vec::new(), Vec::new()];
    for (c, ch) in acc.iter_mut().enumerate() {
        for v in ch.iter_mut() {
            *v *= frontend.adc_gain;
        }
        let q = quantize(ch, cfg.adc_bits, 1.0)?;
        channels[c] = q.codes.into_iter().map(|v| v as i16).collect();
    }

    Ok(SweepCapture {
        sweep_index: m,
        launch_pol: cfg.launch_pol(m),
        timestamp_ns: timestamp_ns(m, period),
        adc_bits: cfg.adc_bits,
        channels,
    })
}

/// A configured simulation run: cable, sweep parameters, an optional laser
/// phase track covering the run, and a fixed front end.
#[derive(Clone, Debug)]
pub struct Simulator {
    cfg: SweepConfig,
    cable: CableModel,
    laser: Option<LaserTrack>,
    frontend: FrontEnd,
    seed: u64,
}

impl Simulator {
    /// `duration` bounds the laser track (seconds of simulated time).
    pub fn new(
        cfg: SweepConfig,
        cable: CableModel,
        laser: Option<&LaserModel>,
        duration: f64,
        seed: u64,
        opts: SimOptions,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some(last) = cable.delays(0.0).last() {
            if *last >= cfg.sweep_period {
                return Err(Error::config(
                    "cable",
                    format!(
                        "round-trip delay {:.3e} s to the last repeater exceeds sweep_period {:.3e} s",
                        last, cfg.sweep_period
                    ),
                ));
            }
        }
        let laser = match laser {
            Some(model) => Some(LaserTrack::synthesize(
                model,
                -cfg.sweep_period,
                duration + cfg.sweep_period,
                opts.laser_track_rate,
                seed,
            )?),
            None => None,
        };
        let frontend = FrontEnd::for_cable(&cable, &cfg, opts.adc_backoff_db);
        Ok(Simulator {
            cfg,
            cable,
            laser,
            frontend,
            seed,
        })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn cable(&self) -> &CableModel {
        &self.cable
    }

    pub fn frontend(&self) -> &FrontEnd {
        &self.frontend
    }

    pub fn laser_track(&self) -> Option<&LaserTrack> {
        self.laser.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Nominal round-trip delays at t = 0.
    pub fn expected_delays(&self) -> Vec<f64> {
        self.cable.delays(0.0)
    }

    pub fn capture(&self, m: u64) -> Result<SweepCapture> {
        if let Some(track) = &self.laser {
            let t1 = (m + 1) as f64 * self.cfg.sweep_period;
            if t1 > track.stop() + 1e-12 {
                return Err(Error::config(
                    "run.duration",
                    format!("laser track ends before sweep {m}"),
                ));
            }
        }
        synthesize(
            &self.cable,
            m,
            self.laser.as_ref(),
            &self.cfg,
            &self.frontend,
            self.seed,
        )
    }

    /// Captures for `sweeps`, computed in parallel, returned in order.
    pub fn captures(&self, sweeps: &[u64]) -> Result<Vec<SweepCapture>> {
        sweeps.par_iter().map(|&m| self.capture(m)).collect()
    }

    pub fn capture_range(&self, start: u64, count: u64) -> Result<Vec<SweepCapture>> {
        let idx: Vec<u64> = (start..start + count).collect();
        self.captures(&idx)
    }
}
