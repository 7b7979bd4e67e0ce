//! Welch power spectral density and the products built on it.

use std::f64::consts::PI;
use std::ops::Range;

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dsp::PhaseSeries;
use crate::error::{Error, Result};

/// Shortest Welch segment accepted.
pub const MIN_SEGMENT: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    /// Number of segments a contiguous series of the full length splits
    /// into; sets the segment length.
    pub segments: usize,
    /// Fractional overlap of consecutive segments, in [0, 1).
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segments: 8,
            overlap: 0.5,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::config("welch.segments", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::config("welch.overlap", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Segment length that tiles `len` samples into `segments` segments.
    pub fn segment_len(&self, len: usize) -> usize {
        let span = 1.0 + (self.segments as f64 - 1.0) * (1.0 - self.overlap);
        let mut n = (len as f64 / span).floor() as usize;
        while n > 1 && (self.segments - 1) * self.hop(n) + n > len {
            n -= 1;
        }
        n
    }

    fn hop(&self, nperseg: usize) -> usize {
        (((1.0 - self.overlap) * nperseg as f64).round() as usize).max(1)
    }
}

pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Least-squares line removed in place.
pub fn detrend_linear(x: &mut [f64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    if n == 1 {
        x[0] = 0.0;
        return;
    }
    let tm = (n as f64 - 1.0) / 2.0;
    let xm = x.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in x.iter().enumerate() {
        let t = i as f64 - tm;
        sxy += t * (v - xm);
        sxx += t * t;
    }
    let slope = sxy / sxx;
    for (i, v) in x.iter_mut().enumerate() {
        *v -= xm + slope * (i as f64 - tm);
    }
}

/// Averaged one-sided periodograms of fixed-length segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    /// Hz, `0..=fs/2` in steps of `fs/nperseg`.
    pub freqs: Vec<f64>,
    /// Units²/Hz.
    pub psd: Vec<f64>,
    pub segments: usize,
    pub nperseg: usize,
    pub sample_rate: f64,
    /// Time-domain variance of the linearly detrended runs, pooled.
    pub variance: f64,
}

impl Welch {
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.nperseg as f64
    }

    /// `Σ psd · Δf`.
    pub fn integral(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    /// Integral over bins whose centre lies in `[lo, hi]`.
    pub fn integral_between(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p * df)
            .sum()
    }
}

/// Periodogram estimator reused across segments.
pub(crate) struct Periodogram {
    window: Vec<f64>,
    norm: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Periodogram {
    pub(crate) fn new(n: usize) -> Self {
        let window = hann(n);
        let norm = window.iter().map(|w| w * w).sum();
        Periodogram {
            window,
            norm,
            fft: FftPlanner::new().plan_fft_forward(n),
            buf: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.window.len()
    }

    /// Adds the one-sided density of `seg` into `acc`.
    pub(crate) fn accumulate(&mut self, seg: &[f64], fs: f64, acc: &mut [f64]) {
        let n = self.len();
        let mut x = seg.to_vec();
        detrend_linear(&mut x);
        for ((b, v), w) in self.buf.iter_mut().zip(&x).zip(&self.window) {
            *b = Complex64::new(v * w, 0.0);
        }
        self.fft.process(&mut self.buf);
        let scale = 1.0 / (fs * self.norm);
        for (k, a) in acc.iter_mut().enumerate() {
            let mut p = self.buf[k].norm_sqr() * scale;
            if k != 0 && !(n % 2 == 0 && k == n / 2) {
                p *= 2.0;
            }
            *a += p;
        }
    }
}

/// Welch estimate of a contiguous series with the default-style config.
pub fn welch(x: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Welch> {
    welch_segmented(x, fs, &[0..x.len()], cfg)
}

/// Welch estimate whose segments never straddle the boundaries of `runs`.
/// The segment length comes from the longest run.
pub fn welch_segmented(x: &[f64], fs: f64, runs: &[Range<usize>], cfg: &WelchConfig) -> Result<Welch> {
    cfg.validate()?;
    if !(fs > 0.0) {
        return Err(Error::config("sample_rate", "must be > 0"));
    }
    let longest = runs.iter().map(|r| r.len()).max().unwrap_or(0);
    let nperseg = cfg.segment_len(longest);
    if nperseg < MIN_SEGMENT {
        return Err(Error::InsufficientSamples {
            needed: MIN_SEGMENT * cfg.segments.max(1),
            got: longest,
        });
    }
    let hop = cfg.hop(nperseg);
    let bins = nperseg / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut pg = Periodogram::new(nperseg);
    let mut count = 0;
    let (mut sq, mut used) = (0.0, 0usize);
    for r in runs {
        if r.len() >= nperseg {
            let mut d = x[r.clone()].to_vec();
            detrend_linear(&mut d);
            sq += d.iter().map(|v| v * v).sum::<f64>();
            used += d.len();
        }
        let mut s = r.start;
        while s + nperseg <= r.end {
            pg.accumulate(&x[s..s + nperseg], fs, &mut acc);
            count += 1;
            s += hop;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(Welch {
        freqs: (0..bins).map(|k| k as f64 * fs / nperseg as f64).collect(),
        psd: acc,
        segments: count,
        nperseg,
        sample_rate: fs,
        variance: sq / used as f64,
    })
}

/// Phase and frequency noise spectra of a phase series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub repeater: usize,
    /// Hz.
    pub freqs: Vec<f64>,
    /// rad²/Hz.
    pub phase_psd: Vec<f64>,
    /// Hz²/Hz, `f²·S_φ`.
    pub frequency_psd: Vec<f64>,
    pub sample_rate: f64,
    pub segments: usize,
    pub nperseg: usize,
    pub resolution_hz: f64,
    pub overlap: f64,
    pub window: String,
    pub detrend: String,
    /// PSD integral over time-domain variance.
    pub parseval_ratio: f64,
}

impl PsdReport {
    /// Mean frequency-noise PSD over bins in `[lo, hi]`.
    pub fn mean_frequency_psd(&self, lo: f64, hi: f64) -> Option<f64> {
        let v: Vec<f64> = self
            .freqs
            .iter()
            .zip(&self.frequency_psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, s)| *s)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Welch S_φ of `values` sampled at `fs`, with segments kept inside the runs
/// delimited by `resets`.
pub fn frequency_noise_psd_raw(values: &[f64], fs: f64, resets: &[usize], cfg: &WelchConfig) -> Result<PsdReport> {
    let runs = runs_between(values.len(), resets);
    let w = welch_segmented(values, fs, &runs, cfg)?;
    let integral = w.integral();
    let parseval_ratio = if w.variance > 0.0 {
        integral / w.variance
    } else if integral == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(PsdReport {
        repeater: 0,
        frequency_psd: w.freqs.iter().zip(&w.psd).map(|(f, s)| f * f * s).collect(),
        resolution_hz: w.resolution(),
        freqs: w.freqs,
        phase_psd: w.psd,
        sample_rate: fs,
        segments: w.segments,
        nperseg: w.nperseg,
        overlap: cfg.overlap,
        window: "hann".into(),
        detrend: "linear".into(),
        parseval_ratio,
    })
}

pub fn frequency_noise_psd(series: &PhaseSeries, cfg: &WelchConfig) -> Result<PsdReport> {
    let mut r = frequency_noise_psd_raw(&series.values, series.sample_rate, &series.resets, cfg)?;
    r.repeater = series.repeater;
    Ok(r)
}

/// Index ranges between reset points.
pub fn runs_between(len: usize, resets: &[usize]) -> Vec<Range<usize>> {
    let mut cuts: Vec<usize> = resets.iter().copied().filter(|&r| r > 0 && r < len).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for c in cuts {
        out.push(start..c);
        start = c;
    }
    if start < len {
        out.push(start..len);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPower {
    /// Band power over total power.
    pub fraction: f64,
    /// `10·log10(fraction)`, floored at −300 dB.
    pub db: f64,
}

/// Share of the Welch power of `x` in `[f_lo, f_hi]`.
pub fn band_power(x: &[f64], fs: f64, f_lo: f64, f_hi: f64, cfg: &WelchConfig) -> Result<BandPower> {
    let nyquist = fs / 2.0;
    if !(f_lo >= 0.0 && f_hi <= nyquist && f_lo <= f_hi) {
        return Err(Error::BandOutsideNyquist {
            lo: f_lo,
            hi: f_hi,
            nyquist,
        });
    }
    if f_lo == f_hi {
        return Ok(BandPower {
            fraction: 0.0,
            db: -300.0,
        });
    }
    let w = welch(x, fs, cfg)?;
    let total = w.integral();
    let fraction = if total > 0.0 {
        w.integral_between(f_lo, f_hi) / total
    } else {
        0.0
    };
    Ok(BandPower {
        fraction,
        db: if fraction > 0.0 { (10.0 * fraction.log10()).max(-300.0) } else { -300.0 },
    })
}

/// Ratio (dB) of mean frequency-noise PSD of `test` over `reference` in
/// each band.
pub fn psd_ratio_db(test: &PsdReport, reference: &PsdReport, bands: &[(f64, f64)]) -> Vec<Option<f64>> {
    bands
        .iter()
        .map(|&(lo, hi)| {
            let a = test.mean_frequency_psd(lo, hi)?;
            let b = reference.mean_frequency_psd(lo, hi)?;
            (a > 0.0 && b > 0.0).then(|| 10.0 * (a / b).log10())
        })
        .collect()
}
