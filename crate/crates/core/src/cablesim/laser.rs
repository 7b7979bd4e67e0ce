//! Laser frequency noise and its synthesis as a phase track.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaserKind {
    FreeRunningFiber,
    CavityStabilized,
}

/// Frequency-noise reduction applied over `[f_lo, f_hi]` Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainBand {
    pub f_lo: f64,
    pub f_hi: f64,
    /// Negative for a reduction.
    pub gain_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserModel {
    pub kind: LaserKind,
    /// Lorentzian linewidth Δν, Hz. White frequency noise level is Δν/π.
    pub linewidth: f64,
    /// Flicker frequency-noise coefficient h, Hz² (adds h/f).
    pub flicker_coefficient: f64,
    /// Ordered, non-overlapping bands. Between bands the gain is
    /// interpolated linearly in dB over log frequency; outside the table the
    /// nearest band's value holds. Ignored for free-running lasers.
    pub stabilization: Vec<GainBand>,
}

impl Default for LaserModel {
    fn default() -> Self {
        Self::free_running()
    }
}

impl LaserModel {
    pub fn free_running() -> Self {
        LaserModel {
            kind: LaserKind::FreeRunningFiber,
            linewidth: 100.0,
            flicker_coefficient: 100.0,
            stabilization: default_stabilization(),
        }
    }

    pub fn cavity_stabilized() -> Self {
        LaserModel {
            kind: LaserKind::CavityStabilized,
            ..Self::free_running()
        }
    }

    /// A laser with no phase noise.
    pub fn ideal() -> Self {
        LaserModel {
            linewidth: 0.0,
            flicker_coefficient: 0.0,
            ..Self::free_running()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth >= 0.0 && self.linewidth.is_finite()) {
            return Err(Error::config("laser.linewidth", "must be finite and >= 0"));
        }
        if !(self.flicker_coefficient >= 0.0 && self.flicker_coefficient.is_finite()) {
            return Err(Error::config("laser.flicker_coefficient", "must be finite and >= 0"));
        }
        let mut prev_hi = f64::NEG_INFINITY;
        for (i, b) in self.stabilization.iter().enumerate() {
            if !(b.f_lo >= 0.0 && b.f_lo <= b.f_hi && b.gain_db.is_finite()) {
                return Err(Error::config(
                    format!("laser.stabilization[{i}]"),
                    "band needs 0 <= f_lo <= f_hi and a finite gain",
                ));
            }
            if b.f_lo < prev_hi {
                return Err(Error::config(
                    format!("laser.stabilization[{i}]"),
                    "bands must be ordered and non-overlapping",
                ));
            }
            prev_hi = b.f_hi;
        }
        Ok(())
    }

    /// Stabilization gain at `f`, dB. Zero for a free-running laser.
    pub fn gain_db(&self, f: f64) -> f64 {
        if self.kind == LaserKind::FreeRunningFiber || self.stabilization.is_empty() {
            return 0.0;
        }
        let bands = &self.stabilization;
        if f <= bands[0].f_hi {
            return bands[0].gain_db;
        }
        for pair in bands.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if f <= a.f_hi {
                return a.gain_db;
            }
            if f < b.f_lo {
                let x = (f.ln() - a.f_hi.ln()) / (b.f_lo.ln() - a.f_hi.ln());
                return a.gain_db + x * (b.gain_db - a.gain_db);
            }
            if f <= b.f_hi {
                return b.gain_db;
            }
        }
        bands[bands.len() - 1].gain_db
    }

    /// One-sided frequency-noise PSD, Hz²/Hz.
    pub fn frequency_noise_psd(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let base = self.linewidth / std::f64::consts::PI + self.flicker_coefficient / f;
        base * 10f64.powf(self.gain_db(f) / 10.0)
    }

    fn is_noiseless(&self) -> bool {
        self.linewidth == 0.0 && self.flicker_coefficient == 0.0
    }
}

/// −10 dB below 1 Hz, −20 dB over 10 Hz–1 kHz.
pub fn default_stabilization() -> Vec<GainBand> {
    vec![
        GainBand {
            f_lo: 0.0,
            f_hi: 1.0,
            gain_db: -10.0,
        },
        GainBand {
            f_lo: 10.0,
            f_hi: 1e3,
            gain_db: -20.0,
        },
    ]
}

/// Synthesizes `n` phase samples (rad) at rate `fs` whose frequency noise
/// has the model's PSD. White Gaussian noise is shaped in the frequency
/// domain and integrated; the same seed gives the same underlying white
/// noise for every model, so free-running and stabilized tracks differ only
/// by their spectral shaping.
pub fn synth_laser_phase(model: &LaserModel, n: usize, fs: f64, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if !(fs > 0.0) {
        return Err(Error::config("laser.track_rate", "must be > 0"));
    }
    if model.is_noiseless() {
        return Ok(vec![0.0; n]);
    }
    let nfft = n.next_power_of_two().max(2);
    let mut r = rng::stream(seed, rng::DOMAIN_LASER, 0);
    let mut buf: Vec<Complex64> = (0..nfft)
        .map(|_| Complex64::new(StandardNormal.sample(&mut r), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(nfft).process(&mut buf);
    // unit-variance white noise has one-sided PSD 2/fs
    let df = fs / nfft as f64;
    buf[0] = Complex64::new(0.0, 0.0);
    for k in 1..nfft {
        let bin = k.min(nfft - k);
        let h = (model.frequency_noise_psd(bin as f64 * df) * fs / 2.0).sqrt();
        buf[k] *= h;
    }
    planner.plan_fft_inverse(nfft).process(&mut buf);
    let scale = TAU / (nfft as f64 * fs);
    let mut phase = Vec::with_capacity(n);
    let mut acc = 0.0;
    for z in buf.iter().take(n) {
        phase.push(acc);
        acc += z.re * scale;
    }
    Ok(phase)
}

/// A laser phase track on a uniform grid, linearly interpolated.
#[derive(Clone, Debug)]
pub struct LaserTrack {
    pub start: f64,
    pub rate: f64,
    pub phase: Vec<f64>,
}

impl LaserTrack {
    /// Covers `[start, stop]` at `rate` samples/s.
    pub fn synthesize(model: &LaserModel, start: f64, stop: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(stop > start) {
            return Err(Error::config("laser.track", "stop must exceed start"));
        }
        let n = ((stop - start) * rate).ceil() as usize + 2;
        Ok(LaserTrack {
            start,
            rate,
            phase: synth_laser_phase(model, n, rate, seed)?,
        })
    }

    pub fn stop(&self) -> f64 {
        self.start + (self.phase.len() - 1) as f64 / self.rate
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.start && t <= self.stop()
    }

    /// Phase at `t`; clamps outside the covered interval.
    pub fn phase_at(&self, t: f64) -> f64 {
        let pos = ((t - self.start) * self.rate).max(0.0);
        let last = self.phase.len() - 1;
        if pos >= last as f64 {
            return self.phase[last];
        }
        let i = pos as usize;
        let frac = pos - i as f64;
        self.phase[i] + (self.phase[i + 1] - self.phase[i]) * frac
    }
}
