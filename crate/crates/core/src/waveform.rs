//! Constant-power swept probe generation and DAC/ADC quantization.
//!
//! The probe is a complex, single-sideband linear frequency sweep centred at
//! an intermediate frequency. Each sweep restarts at phase zero (sawtooth).
//! The last `flyback_fraction` of every period is a smooth return from the
//! top of the band to the bottom (cubic Hermite in frequency, slope matched
//! to the ramp) so the periodic waveform has no instantaneous frequency step;
//! with `flyback_fraction = 0` the ramp occupies the full period.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Launch (or receive) polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    X,
    Y,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::X => 0,
            Polarization::Y => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Polarization::X => Polarization::Y,
            Polarization::Y => Polarization::X,
        }
    }

    /// Unit Jones vector for this polarization.
    pub fn unit_vector(self) -> [Complex64; 2] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Polarization::X => [one, zero],
            Polarization::Y => [zero, one],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolScheme {
    /// X on even sweeps, Y on odd sweeps.
    #[default]
    TimeInterleaved,
}

/// All probe and sampling parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Hz
    pub sample_rate: f64,
    /// Sweep centre frequency, Hz.
    pub if_center: f64,
    /// Hz
    pub sweep_bandwidth: f64,
    /// Seconds.
    pub sweep_period: f64,
    pub dac_bits: u32,
    pub adc_bits: u32,
    pub pol_scheme: PolScheme,
    /// Extra margin around the swept band counted as in-band, Hz.
    pub guard_band: f64,
    /// Fraction of each period used for the frequency flyback, in [0, 0.5).
    pub flyback_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SweepConfig {
    /// Desk-scale defaults: 50 MS/s, 15 MHz IF, 10 MHz sweep, 1 ms period.
    pub fn desk() -> Self {
        SweepConfig {
            sample_rate: 50e6,
            if_center: 15e6,
            sweep_bandwidth: 10e6,
            sweep_period: 1e-3,
            dac_bits: 14,
            adc_bits: 14,
            pol_scheme: PolScheme::TimeInterleaved,
            guard_band: 500e3,
            flyback_fraction: 0.02,
        }
    }

    /// Field-trial rates: 2 GS/s sampling, 125 MHz sweep at 500 MHz IF. The
    /// 70 ms period keeps an 80-span transatlantic round trip unambiguous.
    pub fn long_haul() -> Self {
        SweepConfig {
            sample_rate: 2e9,
            if_center: 500e6,
            sweep_bandwidth: 125e6,
            sweep_period: 70e-3,
            guard_band: 5e6,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("sweep.{field}"),
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("sample_rate", self.sample_rate)?;
        positive("sweep_bandwidth", self.sweep_bandwidth)?;
        positive("sweep_period", self.sweep_period)?;
        positive("if_center", self.if_center)?;
        for (field, bits) in [("dac_bits", self.dac_bits), ("adc_bits", self.adc_bits)] {
            if !(2..=16).contains(&bits) {
                return Err(Error::config(
                    format!("sweep.{field}"),
                    format!("must lie in [2, 16], got {bits}"),
                ));
            }
        }
        if !(self.guard_band >= 0.0 && self.guard_band.is_finite()) {
            return Err(Error::config("sweep.guard_band", "must be finite and >= 0"));
        }
        if !(0.0..0.5).contains(&self.flyback_fraction) {
            return Err(Error::config(
                "sweep.flyback_fraction",
                format!("must lie in [0, 0.5), got {}", self.flyback_fraction),
            ));
        }
        if self.if_center - self.sweep_bandwidth / 2.0 <= 0.0 {
            return Err(Error::config(
                "sweep.if_center",
                "sweep must stay at positive frequencies (if_center > sweep_bandwidth / 2)",
            ));
        }
        if self.if_center + self.sweep_bandwidth / 2.0 >= self.sample_rate / 2.0 {
            return Err(Error::config(
                "sweep.if_center",
                format!(
                    "if_center + sweep_bandwidth/2 = {} Hz must stay below Nyquist {} Hz",
                    self.if_center + self.sweep_bandwidth / 2.0,
                    self.sample_rate / 2.0
                ),
            ));
        }
        let n = self.sweep_period * self.sample_rate;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) || n.round() < 4.0 {
            return Err(Error::config(
                "sweep.sweep_period",
                format!("sweep_period * sample_rate = {n} is not a whole number of samples"),
            ));
        }
        let cycles = self.if_center * self.sweep_period;
        if (cycles - cycles.round()).abs() > 1e-6 {
            return Err(Error::config(
                "sweep.sweep_period",
                format!(
                    "if_center * sweep_period = {cycles} must be a whole number of cycles \
                     for a phase-continuous sweep train"
                ),
            ));
        }
        Ok(())
    }

    /// Samples per sweep, `T·fs`.
    pub fn samples_per_sweep(&self) -> usize {
        (self.sweep_period * self.sample_rate).round() as usize
    }

    /// Duration of the linear ramp within one period.
    pub fn ramp_duration(&self) -> f64 {
        self.sweep_period * (1.0 - self.flyback_fraction)
    }

    /// Sweep rate γ in Hz/s over the linear ramp.
    pub fn sweep_rate(&self) -> f64 {
        self.sweep_bandwidth / self.ramp_duration()
    }

    /// Lowest and highest instantaneous frequency.
    pub fn band(&self) -> (f64, f64) {
        (
            self.if_center - self.sweep_bandwidth / 2.0,
            self.if_center + self.sweep_bandwidth / 2.0,
        )
    }

    /// Delay resolution `1/B` expressed in samples.
    pub fn resolution_bins(&self) -> f64 {
        self.sample_rate / self.sweep_bandwidth
    }

    /// Accumulated phase in cycles at `local` seconds into a sweep,
    /// `local` in `[0, T]`. Not wrapped.
    pub fn cycles_at(&self, local: f64) -> f64 {
        let (f_lo, f_hi) = self.band();
        let ramp = self.ramp_duration();
        let gamma = self.sweep_rate();
        if local <= ramp {
            return f_lo * local + 0.5 * gamma * local * local;
        }
        let h = self.sweep_period - ramp;
        let u = (local - ramp) / h;
        let (u2, u3, u4) = (u * u, u * u * u, u * u * u * u);
        let i00 = u4 / 2.0 - u3 + u;
        let i10 = u4 / 4.0 - 2.0 * u3 / 3.0 + u2 / 2.0;
        let i01 = -u4 / 2.0 + u3;
        let i11 = u4 / 4.0 - u3 / 3.0;
        let at_ramp_end = f_lo * ramp + 0.5 * gamma * ramp * ramp;
        at_ramp_end + h * (i00 * f_hi + i10 * h * gamma + i01 * f_lo + i11 * h * gamma)
    }

    /// Instantaneous frequency in Hz at `local` seconds into a sweep.
    pub fn instantaneous_frequency(&self, local: f64) -> f64 {
        let (f_lo, f_hi) = self.band();
        let ramp = self.ramp_duration();
        let gamma = self.sweep_rate();
        if local <= ramp {
            return f_lo + gamma * local;
        }
        let h = self.sweep_period - ramp;
        let u = (local - ramp) / h;
        let h00 = 2.0 * u * u * u - 3.0 * u * u + 1.0;
        let h10 = u * u * u - 2.0 * u * u + u;
        let h01 = -2.0 * u * u * u + 3.0 * u * u;
        let h11 = u * u * u - u * u;
        h00 * f_hi + h10 * h * gamma + h01 * f_lo + h11 * h * gamma
    }

    /// Launch polarization of sweep `m`.
    pub fn launch_pol(&self, sweep_index: u64) -> Polarization {
        pol_multiplex(self, sweep_index)
    }
}

/// One sweep period of the complex probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeWaveform {
    pub sweep_index: u64,
    pub launch_pol: Polarization,
    pub samples: Vec<Complex64>,
}

/// Launch polarization for a sweep. Stateless: X on even, Y on odd indices.
pub fn pol_multiplex(cfg: &SweepConfig, sweep_index: u64) -> Polarization {
    match cfg.pol_scheme {
        PolScheme::TimeInterleaved => {
            if sweep_index % 2 == 0 {
                Polarization::X
            } else {
                Polarization::Y
            }
        }
    }
}

/// Generates sweep `sweep_index`. A pure function of its arguments.
pub fn generate_sweep(cfg: &SweepConfig, sweep_index: u64) -> Result<ProbeWaveform> {
    cfg.validate()?;
    let n = cfg.samples_per_sweep();
    let dt = 1.0 / cfg.sample_rate;
    let samples = (0..n)
        .map(|i| {
            let cycles = cfg.cycles_at(i as f64 * dt);
            Complex64::from_polar(1.0, TAU * cycles.fract())
        })
        .collect();
    Ok(ProbeWaveform {
        sweep_index,
        launch_pol: pol_multiplex(cfg, sweep_index),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quantized {
    pub codes: Vec<i32>,
    /// Number of inputs that saturated.
    pub clipped: usize,
}

/// Mid-tread uniform quantizer with `2^bits` levels spanning
/// `[-full_scale, full_scale)`. Rounds half away from zero and saturates
/// silently (saturations are counted).
pub fn quantize(samples: &[f64], bits: u32, full_scale: f64) -> Result<Quantized> {
    if !(2..=16).contains(&bits) {
        return Err(Error::config("bits", format!("must lie in [2, 16], got {bits}")));
    }
    if !(full_scale > 0.0 && full_scale.is_finite()) {
        return Err(Error::config("full_scale", "must be finite and > 0"));
    }
    let half = (1i64 << (bits - 1)) as f64;
    let (lo, hi) = (-(half as i64), half as i64 - 1);
    let scale = half / full_scale;
    let mut clipped = 0;
    let codes = samples
        .iter()
        .map(|&x| {
            let q = (x * scale).round() as i64;
            if q < lo || q > hi {
                clipped += 1;
            }
            q.clamp(lo, hi) as i32
        })
        .collect();
    Ok(Quantized { codes, clipped })
}

/// The probe as it leaves two DACs (in-phase and quadrature).
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedProbe {
    pub bits: u32,
    pub i: Vec<i32>,
    pub q: Vec<i32>,
    pub clipped: usize,
}

impl QuantizedProbe {
    pub fn to_complex(&self) -> Vec<Complex64> {
        let half = (1i64 << (self.bits - 1)) as f64;
        self.i
            .iter()
            .zip(&self.q)
            .map(|(&i, &q)| Complex64::new(i as f64 / half, q as f64 / half))
            .collect()
    }

    /// Peak-to-trough envelope ripple in dB.
    pub fn envelope_ripple_db(&self) -> f64 {
        envelope_ripple_db(&self.to_complex())
    }
}

/// Quantizes the I and Q rails of a probe with unit full scale.
pub fn quantize_probe(probe: &ProbeWaveform, bits: u32) -> Result<QuantizedProbe> {
    let re: Vec<f64> = probe.samples.iter().map(|z| z.re).collect();
    let im: Vec<f64> = probe.samples.iter().map(|z| z.im).collect();
    let i = quantize(&re, bits, 1.0)?;
    let q = quantize(&im, bits, 1.0)?;
    Ok(QuantizedProbe {
        bits,
        clipped: i.clipped + q.clipped,
        i: i.codes,
        q: q.codes,
    })
}

/// `20·log10(max|s| / min|s|)`.
pub fn envelope_ripple_db(samples: &[Complex64]) -> f64 {
    let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), z| {
        let m = z.norm();
        (lo.min(m), hi.max(m))
    });
    20.0 * (hi / lo).log10()
}

/// Power outside `[f_lo − guard, f_hi + guard]` relative to the total, dBc,
/// from one full period of samples. Negative frequencies count as out of
/// band.
pub fn out_of_band_dbc(samples: &[Complex64], cfg: &SweepConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = samples.len();
    let mut buf = samples.to_vec();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (f_lo, f_hi) = cfg.band();
    let (lo, hi) = (f_lo - cfg.guard_band, f_hi + cfg.guard_band);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, z) in buf.iter().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } * cfg.sample_rate / n as f64;
        if f >= lo && f <= hi {
            inside += z.norm_sqr();
        } else {
            outside += z.norm_sqr();
        }
    }
    Ok(10.0 * (outside / (inside + outside)).max(1e-30).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_out_of_band() {
        let cfg = SweepConfig::desk();
        let n = 1000;
        let inband: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, TAU * 15e6 * i as f64 / 50e6))
            .collect();
        assert!(out_of_band_dbc(&inband, &cfg).unwrap() < -250.0);
        // equal tones in and out of band
        let mixed: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = i as f64 / 50e6;
                Complex64::from_polar(1.0, TAU * 15e6 * t) + Complex64::from_polar(1.0, -TAU * 5e6 * t)
            })
            .collect();
        assert!((out_of_band_dbc(&mixed, &cfg).unwrap() + 3.0103).abs() < 1e-6);
    }

    #[test]
    fn desk_sweep_has_unit_modulus() {
        let cfg = SweepConfig::desk();
        let p = generate_sweep(&cfg, 0).unwrap();
        assert_eq!(p.samples.len(), 50_000);
        assert!(p.samples.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(envelope_ripple_db(&p.samples) < 1e-9);
    }

    #[test]
    fn chirp_starts_at_bottom_of_band() {
        let cfg = SweepConfig::desk();
        assert_eq!(cfg.instantaneous_frequency(0.0), 10e6);
        let ramp_end = cfg.instantaneous_frequency(cfg.ramp_duration());
        assert!((ramp_end - 20e6).abs() < 1e-3);
        // flyback returns to the bottom with matched slope
        assert!((cfg.instantaneous_frequency(cfg.sweep_period) - 10e6).abs() < 1e-3);
    }

    #[test]
    fn phase_is_continuous_across_sweeps() {
        let cfg = SweepConfig::desk();
        let end = cfg.cycles_at(cfg.sweep_period);
        assert!((end - end.round()).abs() < 1e-9, "end cycles {end}");
    }

    #[test]
    fn without_flyback_matches_closed_form() {
        let cfg = SweepConfig {
            flyback_fraction: 0.0,
            ..SweepConfig::desk()
        };
        let gamma = cfg.sweep_bandwidth / cfg.sweep_period;
        for i in [0usize, 1, 777, 49_999] {
            let t = i as f64 / cfg.sample_rate;
            let want = cfg.if_center * t + 0.5 * gamma * t * t - cfg.sweep_bandwidth / 2.0 * t;
            assert!((cfg.cycles_at(t) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn pol_interleaving() {
        let cfg = SweepConfig::desk();
        assert_eq!(pol_multiplex(&cfg, 0), Polarization::X);
        assert_eq!(pol_multiplex(&cfg, 1), Polarization::Y);
        assert_eq!(pol_multiplex(&cfg, 7), Polarization::Y);
    }

    #[test]
    fn quantizer_edges() {
        let q = quantize(&[0.0, 1.0, -1.0, 0.5, -2.0], 14, 1.0).unwrap();
        assert_eq!(q.codes, vec![0, 8191, -8192, 4096, -8192]);
        assert_eq!(q.clipped, 2);
        // half away from zero
        let q = quantize(&[0.5 / 8192.0, -0.5 / 8192.0], 14, 1.0).unwrap();
        assert_eq!(q.codes, vec![1, -1]);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = SweepConfig::desk();
        cfg.sweep_period = 1.00001e-3;
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "sweep.sweep_period"),
            other => panic!("unexpected {other:?}"),
        }
        let mut cfg = SweepConfig::desk();
        cfg.if_center = 21e6;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "sweep.if_center"));
        let mut cfg = SweepConfig::desk();
        cfg.sweep_bandwidth = 0.0;
        assert!(cfg.validate().is_err());
        assert!(SweepConfig::long_haul().validate().is_ok());
    }
}
