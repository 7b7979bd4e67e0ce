//! Short-time power spectra of phase series.

use serde::{Deserialize, Serialize};

use super::psd::{runs_between, Periodogram};
use crate::dsp::PhaseSeries;
use crate::error::{Error, Result};

/// Power values below this are reported as this, dB.
pub const FLOOR_DB: f64 = -300.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrogramConfig {
    /// Samples per periodogram.
    pub window_len: usize,
    /// Fractional overlap of consecutive periodograms, in [0, 1).
    pub overlap: f64,
    /// Periodograms averaged into each column.
    pub averages: usize,
    /// Displayed band, Hz; `None` means 0.1–10 Hz clipped to Nyquist.
    pub band: Option<(f64, f64)>,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            window_len: 1024,
            overlap: 0.5,
            averages: 1,
            band: None,
        }
    }
}

impl SpectrogramConfig {
    /// Window giving roughly `resolution` Hz bins at `fs`.
    pub fn for_resolution(fs: f64, resolution: f64) -> Self {
        SpectrogramConfig {
            window_len: (fs / resolution).ceil().max(8.0) as usize,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 4 {
            return Err(Error::config("spectrogram.window_len", "must be >= 4"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::config("spectrogram.overlap", "must lie in [0, 1)"));
        }
        if self.averages == 0 {
            return Err(Error::config("spectrogram.averages", "must be >= 1"));
        }
        Ok(())
    }

    fn hop(&self) -> usize {
        (((1.0 - self.overlap) * self.window_len as f64).round() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramGrid {
    /// Repeater or span number the series belongs to.
    pub index: usize,
    /// Column centre times, s.
    pub times: Vec<f64>,
    /// Hz, within `(0, fs/2]`.
    pub freqs: Vec<f64>,
    /// `power_db[column][frequency]`, dB re 1 unit²/Hz.
    pub power_db: Vec<Vec<f64>>,
    pub sample_rate: f64,
    pub window_len: usize,
    pub overlap: f64,
    pub averages: usize,
    pub window: String,
}

impl SpectrogramGrid {
    pub fn columns(&self) -> usize {
        self.times.len()
    }

    /// Frequency of the largest cell in column `c`.
    pub fn ridge(&self, c: usize) -> Option<f64> {
        let row = self.power_db.get(c)?;
        let i = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]))?;
        Some(self.freqs[i])
    }
}

fn to_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(FLOOR_DB)
    } else {
        FLOOR_DB
    }
}

/// Spectrogram of `values` (sampled at `fs`, first sample at `t0`). Columns
/// never straddle a reset.
pub fn spectrogram_raw(
    values: &[f64],
    fs: f64,
    t0: f64,
    resets: &[usize],
    cfg: &SpectrogramConfig,
) -> Result<SpectrogramGrid> {
    cfg.validate()?;
    if !(fs > 0.0) {
        return Err(Error::config("sample_rate", "must be > 0"));
    }
    let nyquist = fs / 2.0;
    let (lo, hi) = match cfg.band {
        Some((lo, hi)) => {
            if !(lo >= 0.0 && hi <= nyquist && lo <= hi) {
                return Err(Error::BandOutsideNyquist { lo, hi, nyquist });
            }
            (lo, hi)
        }
        None => (0.1f64.min(nyquist), 10.0f64.min(nyquist)),
    };
    let n = cfg.window_len;
    let hop = cfg.hop();
    let span = (cfg.averages - 1) * hop + n;
    let runs = runs_between(values.len(), resets);
    if runs.iter().all(|r| r.len() < span) {
        return Err(Error::InsufficientSamples {
            needed: span,
            got: runs.iter().map(|r| r.len()).max().unwrap_or(0),
        });
    }
    let df = fs / n as f64;
    let keep: Vec<usize> = (1..=n / 2).filter(|&k| k as f64 * df >= lo && k as f64 * df <= hi).collect();
    let mut pg = Periodogram::new(n);
    let mut grid = SpectrogramGrid {
        index: 0,
        times: Vec::new(),
        freqs: keep.iter().map(|&k| k as f64 * df).collect(),
        power_db: Vec::new(),
        sample_rate: fs,
        window_len: n,
        overlap: cfg.overlap,
        averages: cfg.averages,
        window: "hann".into(),
    };
    let step = cfg.averages * hop;
    let mut acc = vec![0.0; n / 2 + 1];
    for r in runs {
        let mut s = r.start;
        while s + span <= r.end {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for j in 0..cfg.averages {
                let a = s + j * hop;
                pg.accumulate(&values[a..a + n], fs, &mut acc);
            }
            let scale = 1.0 / cfg.averages as f64;
            grid.power_db.push(keep.iter().map(|&k| to_db(acc[k] * scale)).collect());
            grid.times.push(t0 + (s as f64 + span as f64 / 2.0) / fs);
            s += step;
        }
    }
    Ok(grid)
}

pub fn spectrogram(series: &PhaseSeries, cfg: &SpectrogramConfig) -> Result<SpectrogramGrid> {
    let t0 = series.times.first().copied().unwrap_or(0.0);
    let mut g = spectrogram_raw(&series.values, series.sample_rate, t0, &series.resets, cfg)?;
    g.index = series.repeater;
    Ok(g)
}
