//! Observation record formats.
//!
//! JSON lines: one object per record with `k`, `sweep_index`, `launch_pol`,
//! `timestamp`, `jones` (8 reals, row-major `[re, im]` pairs), `delay_est`,
//! `nominal_delay`, `intensity_db`, `snr_db`, `bandwidth_hz` and `flags`
//! (list of names). Non-finite numbers are written as ±1e308 / 0.
//!
//! Binary: fixed 96-byte little-endian records.
//!
//! | offset | type     | field                    |
//! |--------|----------|--------------------------|
//! | 0      | u32      | repeater k               |
//! | 4      | u32      | flag bits                |
//! | 8      | u64      | sweep_index              |
//! | 16     | f64      | timestamp, s             |
//! | 24     | f64      | delay_est, s             |
//! | 32     | f64      | nominal_delay, s         |
//! | 40     | f32      | intensity_db             |
//! | 44     | f32      | snr_db                   |
//! | 48     | f32 × 8  | jones                    |
//! | 80     | f64      | measurement bandwidth, Hz|
//! | 88     | u8       | launch_pol (0 X, 1 Y)    |
//! | 89     | u8 × 7   | reserved, zero           |

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::observation::{ObservationFlags, RepeaterObservation};
use crate::error::{Error, Result};
use crate::jones::Jones;
use crate::waveform::Polarization;

pub const BINARY_RECORD_LEN: usize = 96;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct JsonRecord {
    k: usize,
    sweep_index: u64,
    launch_pol: Polarization,
    timestamp: f64,
    jones: [f64; 8],
    delay_est: f64,
    nominal_delay: f64,
    intensity_db: f64,
    snr_db: f64,
    bandwidth_hz: f64,
    flags: Vec<String>,
}

fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1e308, 1e308)
    }
}

impl From<&RepeaterObservation> for JsonRecord {
    fn from(o: &RepeaterObservation) -> Self {
        JsonRecord {
            k: o.repeater,
            sweep_index: o.sweep_index,
            launch_pol: o.launch_pol,
            timestamp: finite(o.timestamp),
            jones: o.jones.to_reals().map(finite),
            delay_est: finite(o.delay_est),
            nominal_delay: finite(o.nominal_delay),
            intensity_db: finite(o.intensity_db),
            snr_db: finite(o.snr_db),
            bandwidth_hz: finite(o.measurement_bandwidth_hz),
            flags: o.flags.names().into_iter().map(String::from).collect(),
        }
    }
}

impl TryFrom<JsonRecord> for RepeaterObservation {
    type Error = Error;

    fn try_from(r: JsonRecord) -> Result<Self> {
        let mut flags = ObservationFlags::empty();
        for f in &r.flags {
            flags.insert(
                ObservationFlags::from_name(f).ok_or_else(|| Error::Malformed(format!("unknown flag `{f}`")))?,
            );
        }
        Ok(RepeaterObservation {
            repeater: r.k,
            sweep_index: r.sweep_index,
            launch_pol: r.launch_pol,
            timestamp: r.timestamp,
            jones: Jones::from_reals(r.jones),
            delay_est: r.delay_est,
            nominal_delay: r.nominal_delay,
            intensity_db: r.intensity_db,
            snr_db: r.snr_db,
            measurement_bandwidth_hz: r.bandwidth_hz,
            flags,
        })
    }
}

pub fn to_json_line(o: &RepeaterObservation) -> String {
    serde_json::to_string(&JsonRecord::from(o)).expect("plain record serializes")
}

pub fn from_json_line(line: &str) -> Result<RepeaterObservation> {
    serde_json::from_str::<JsonRecord>(line)?.try_into()
}

pub fn write_jsonl<W: Write>(mut w: W, obs: &[RepeaterObservation]) -> Result<()> {
    for o in obs {
        writeln!(w, "{}", to_json_line(o))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<RepeaterObservation>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_json_line(&line)?);
    }
    Ok(out)
}

pub fn encode_binary(o: &RepeaterObservation) -> [u8; BINARY_RECORD_LEN] {
    let mut b = [0u8; BINARY_RECORD_LEN];
    b[0..4].copy_from_slice(&(o.repeater as u32).to_le_bytes());
    b[4..8].copy_from_slice(&o.flags.bits().to_le_bytes());
    b[8..16].copy_from_slice(&o.sweep_index.to_le_bytes());
    b[16..24].copy_from_slice(&o.timestamp.to_le_bytes());
    b[24..32].copy_from_slice(&o.delay_est.to_le_bytes());
    b[32..40].copy_from_slice(&o.nominal_delay.to_le_bytes());
    b[40..44].copy_from_slice(&(o.intensity_db as f32).to_le_bytes());
    b[44..48].copy_from_slice(&(o.snr_db as f32).to_le_bytes());
    for (i, v) in o.jones.to_reals().iter().enumerate() {
        let at = 48 + 4 * i;
        b[at..at + 4].copy_from_slice(&(*v as f32).to_le_bytes());
    }
    b[80..88].copy_from_slice(&o.measurement_bandwidth_hz.to_le_bytes());
    b[88] = o.launch_pol.index() as u8;
    b
}

pub fn decode_binary(b: &[u8]) -> Result<RepeaterObservation> {
    if b.len() != BINARY_RECORD_LEN {
        return Err(Error::LengthMismatch {
            expected: BINARY_RECORD_LEN,
            actual: b.len(),
        });
    }
    let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().unwrap());
    let f32_at = |i: usize| f32::from_le_bytes(b[i..i + 4].try_into().unwrap()) as f64;
    let mut reals = [0.0; 8];
    for (i, r) in reals.iter_mut().enumerate() {
        *r = f32_at(48 + 4 * i);
    }
    let launch_pol = match b[88] {
        0 => Polarization::X,
        1 => Polarization::Y,
        v => return Err(Error::Malformed(format!("launch polarization byte {v}"))),
    };
    Ok(RepeaterObservation {
        repeater: u32_at(0) as usize,
        flags: ObservationFlags(u32_at(4)),
        sweep_index: u64_at(8),
        timestamp: f64_at(16),
        delay_est: f64_at(24),
        nominal_delay: f64_at(32),
        intensity_db: f32_at(40),
        snr_db: f32_at(44),
        jones: Jones::from_reals(reals),
        measurement_bandwidth_hz: f64_at(80),
        launch_pol,
    })
}

pub fn write_binary<W: Write>(mut w: W, obs: &[RepeaterObservation]) -> Result<()> {
    for o in obs {
        w.write_all(&encode_binary(o))?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<RepeaterObservation>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % BINARY_RECORD_LEN != 0 {
        return Err(Error::Malformed(format!(
            "{} bytes is not a whole number of {BINARY_RECORD_LEN}-byte records",
            buf.len()
        )));
    }
    buf.chunks_exact(BINARY_RECORD_LEN).map(decode_binary).collect()
}
