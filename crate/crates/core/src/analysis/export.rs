//! CSV and JSON writers for analysis products.
//!
//! Every CSV starts with a header row naming each column with its unit.
//! Spectrograms are written as a CSV matrix (one row per time column, one
//! value per frequency) next to a JSON sidecar carrying the axes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::movement::{DelaySeries, MovementReport};
use super::psd::PsdReport;
use super::spectrogram::SpectrogramGrid;
use crate::dsp::PhaseSeries;
use crate::error::Result;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_phase_csv<W: Write>(mut w: W, s: &PhaseSeries) -> Result<()> {
    writeln!(w, "sweep_index,time_s,phase_rad,reset")?;
    for i in 0..s.len() {
        let reset = s.resets.binary_search(&i).is_ok() as u8;
        writeln!(w, "{},{:.9},{:.12e},{reset}", s.sweep_indices[i], s.times[i], s.values[i])?;
    }
    Ok(())
}

pub fn write_delay_csv<W: Write>(mut w: W, s: &DelaySeries) -> Result<()> {
    writeln!(w, "sweep_index,time_s,delay_s,relative_ns")?;
    for ((m, t), (d, r)) in s.sweep_indices.iter().zip(&s.times).zip(s.delays.iter().zip(s.relative_ns())) {
        writeln!(w, "{m},{t:.9},{d:.15e},{r:.6}")?;
    }
    Ok(())
}

pub fn write_psd_csv<W: Write>(mut w: W, r: &PsdReport) -> Result<()> {
    writeln!(w, "frequency_hz,phase_psd_rad2_per_hz,frequency_psd_hz2_per_hz")?;
    for ((f, p), n) in r.freqs.iter().zip(&r.phase_psd).zip(&r.frequency_psd) {
        writeln!(w, "{f:.9},{p:.9e},{n:.9e}")?;
    }
    Ok(())
}

pub fn write_spectrogram_csv<W: Write>(mut w: W, g: &SpectrogramGrid) -> Result<()> {
    write!(w, "time_s")?;
    for f in &g.freqs {
        write!(w, ",db_at_{f:.6}_hz")?;
    }
    writeln!(w)?;
    for (t, row) in g.times.iter().zip(&g.power_db) {
        write!(w, "{t:.6}")?;
        for p in row {
            write!(w, ",{p:.4}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrogramSidecar<'a> {
    index: usize,
    times_s: &'a [f64],
    freqs_hz: &'a [f64],
    sample_rate_hz: f64,
    window_len: usize,
    overlap: f64,
    averages: usize,
    window: &'a str,
    units: &'a str,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_spectrogram(dir: &Path, stem: &str, g: &SpectrogramGrid) -> Result<()> {
    let mut w = create(&dir.join(format!("{stem}.csv")))?;
    write_spectrogram_csv(&mut w, g)?;
    w.flush()?;
    let side = SpectrogramSidecar {
        index: g.index,
        times_s: &g.times,
        freqs_hz: &g.freqs,
        sample_rate_hz: g.sample_rate,
        window_len: g.window_len,
        overlap: g.overlap,
        averages: g.averages,
        window: &g.window,
        units: "dB re 1 rad^2/Hz",
    };
    write_json(&dir.join(format!("{stem}.json")), &side)
}

pub fn write_movement_csv<W: Write>(mut w: W, r: &MovementReport) -> Result<()> {
    write!(w, "sweep_index,time_s")?;
    for s in &r.spans {
        write!(w, ",span{}_ns", s.span)?;
    }
    writeln!(w)?;
    for (i, (m, t)) in r.sweep_indices.iter().zip(&r.times).enumerate() {
        write!(w, "{m},{t:.9}")?;
        for s in &r.spans {
            write!(w, ",{:.6}", s.movement_ns[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_csv_layout() {
        let s = PhaseSeries {
            repeater: 2,
            sweep_indices: vec![1, 3, 7],
            times: vec![0.002, 0.004, 0.008],
            values: vec![0.0, 0.5, -1.0],
            resets: vec![2],
            sample_rate: 500.0,
        };
        let mut out = Vec::new();
        write_phase_csv(&mut out, &s).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sweep_index,time_s,phase_rad,reset");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("7,0.008000000,") && lines[3].ends_with(",1"));
    }

    #[test]
    fn spectrogram_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpectrogramGrid {
            index: 1,
            times: vec![1.0, 2.0],
            freqs: vec![0.5, 1.0],
            power_db: vec![vec![-10.0, -20.0], vec![-11.0, -21.0]],
            sample_rate: 4.0,
            window_len: 8,
            overlap: 0.5,
            averages: 1,
            window: "hann".into(),
        };
        write_spectrogram(dir.path(), "spec_k1", &g).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("spec_k1.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec_k1.json")).unwrap()).unwrap();
        assert_eq!(side["freqs_hz"][1], 1.0);
    }
}
