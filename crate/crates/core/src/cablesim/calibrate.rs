//! Noise-floor calibration: find the repeater ASE density that puts the
//! per-repeater SNR at a target for a given averaging time.

use rayon::prelude::*;

use super::cable::CableModel;
use super::propagate::{SimOptions, Simulator};
use crate::dsp::{coherent_average, detect_around, estimate_snr, ImpulseResponse, MatchedFilter};
use crate::error::{Error, Result};
use crate::waveform::{generate_sweep, SweepConfig};

/// Largest same-polarization average simulated per bisection step; longer
/// windows are extrapolated at 10·log10(W) from here.
const MAX_SIM_AVERAGE: usize = 32;
const TOLERANCE_DB: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCalibration {
    /// ASE density per repeater, 1/Hz.
    pub density: f64,
    /// Mean SNR over repeaters at the requested averaging, dB.
    pub achieved_snr_db: f64,
    pub per_repeater_db: Vec<f64>,
    pub iterations: usize,
}

/// Per-repeater SNR (dB) after coherently averaging the first `per_pol`
/// X-launch sweeps, each matched-filtered against its successor.
pub fn measure_snr(cable: &CableModel, cfg: &SweepConfig, per_pol: usize, seed: u64) -> Result<Vec<f64>> {
    let per_pol = per_pol.max(1);
    let sim = Simulator::new(
        cfg.clone(),
        cable.clone(),
        None,
        2.0 * per_pol as f64 * cfg.sweep_period,
        seed,
        SimOptions::default(),
    )?;
    let filter = MatchedFilter::new(cfg, &generate_sweep(cfg, 0)?)?;
    let irs: Vec<ImpulseResponse> = (0..per_pol as u64)
        .into_par_iter()
        .map(|i| {
            let a = sim.capture(2 * i)?;
            let b = sim.capture(2 * i + 1)?;
            filter.aligned(&a, &b)
        })
        .collect::<Result<_>>()?;
    let avg = coherent_average(&irs, per_pol)?;
    let centres: Vec<f64> = sim.expected_delays().iter().map(|d| d * cfg.sample_rate).collect();
    let peaks = detect_around(&avg, &centres, 3, f64::NEG_INFINITY);
    let bins: Vec<usize> = peaks.iter().map(|p| p.bin).collect();
    Ok(estimate_snr(&avg, &bins).per_peak.iter().map(|e| e.snr_db).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Searches (in log density) for the uniform per-repeater ASE density that
/// puts the mean SNR at `averaging` seconds within 0.05 dB of `target_snr_db`.
/// Every step reuses `seed`, so the result is deterministic.
pub fn calibrate_noise_floor(
    cable: &CableModel,
    cfg: &SweepConfig,
    target_snr_db: f64,
    averaging: f64,
    seed: u64,
) -> Result<NoiseCalibration> {
    cfg.validate()?;
    if cable.is_empty() {
        return Err(Error::CalibrationUnreachable {
            target_db: target_snr_db,
            bound_db: f64::NEG_INFINITY,
        });
    }
    if !(averaging > 0.0) {
        return Err(Error::config("noise.averaging", "must be > 0"));
    }
    let w_eq = ((averaging / (2.0 * cfg.sweep_period)).round() as usize).max(1);
    let w_sim = w_eq.min(MAX_SIM_AVERAGE);
    let gain = 10.0 * (w_eq as f64 / w_sim as f64).log10();
    let mut iterations = 0;
    let mut eval = |d: f64| -> Result<Vec<f64>> {
        iterations += 1;
        let c = cable.clone().with_uniform_ase(d)?;
        Ok(measure_snr(&c, cfg, w_sim, seed)?.iter().map(|s| s + gain).collect())
    };

    let bound = mean(&eval(0.0)?);
    if !(bound > target_snr_db) {
        return Err(Error::CalibrationUnreachable {
            target_db: target_snr_db,
            bound_db: bound,
        });
    }

    // White noise sets the floor, so SNR falls 1 dB per dB of density:
    // take Newton steps with that slope, falling back to bisection once a
    // bracket exists and a step misbehaves.
    let mut d = 1e-12;
    let mut per = eval(d)?;
    let mut best = (d, per.clone());
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..40 {
        let s = mean(&per);
        if (s - target_snr_db).abs() < (mean(&best.1) - target_snr_db).abs() {
            best = (d, per.clone());
        }
        if (s - target_snr_db).abs() < TOLERANCE_DB {
            break;
        }
        if s > target_snr_db {
            lo = lo.max(d);
        } else {
            hi = hi.min(d);
        }
        let newton = d * 10f64.powf((s - target_snr_db) / 10.0);
        d = if newton > lo && newton < hi {
            newton
        } else if lo > 0.0 && hi.is_finite() {
            (lo * hi).sqrt()
        } else {
            newton
        };
        if !(d > 1e-40 && d < 1e10) {
            return Err(Error::CalibrationUnreachable {
                target_db: target_snr_db,
                bound_db: bound,
            });
        }
        per = eval(d)?;
    }
    let achieved = mean(&best.1);
    Ok(NoiseCalibration {
        density: best.0,
        achieved_snr_db: achieved,
        per_repeater_db: best.1,
        iterations,
    })
}
