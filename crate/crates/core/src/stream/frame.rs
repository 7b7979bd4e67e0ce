//! Wire format of one sweep capture.
//!
//! ```text
//! offset size  field
//! 0      4     magic "OFDR"
//! 4      1     version (1)
//! 5      1     flags: bit0 launch polarization Y, bit1 end of stream
//! 6      8     sequence, u64 LE
//! 14     8     timestamp_ns, u64 LE
//! 22     8     sweep_index, u64 LE
//! 30     4     sample_count, u32 LE
//! 34     4·n   samples: i16 LE pairs (X-receive, Y-receive), ADC codes
//!              left-justified to 16 bits
//! 34+4n  4     CRC-32 (IEEE, reflected 0xEDB88320) of bytes [0, 34+4n)
//! ```
//!
//! An end-of-stream frame has bit1 set, no samples, and carries the number
//! of data frames sent in `sequence`.

use thiserror::Error;

use crate::dsp::SweepCapture;
use crate::waveform::Polarization;

pub const MAGIC: [u8; 4] = *b"OFDR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 34;
pub const CRC_LEN: usize = 4;
pub const FLAG_POL_Y: u8 = 1;
pub const FLAG_END: u8 = 1 << 1;
/// Upper bound on samples per frame accepted by the decoder.
pub const MAX_SAMPLES: u32 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("need {needed} bytes, have {have}")]
    NeedMore { needed: usize, have: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("sample count {0} exceeds limit")]
    TooLarge(u64),
    #[error("CRC mismatch in frame {sequence}: computed {computed:08x}, stored {stored:08x}")]
    Crc {
        sequence: u64,
        computed: u32,
        stored: u32,
        /// Encoded length of the rejected frame.
        len: usize,
    },
    #[error("ADC width {0} outside [2, 16]")]
    AdcBits(u32),
    #[error("channel lengths differ: {0} vs {1}")]
    Channels(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub version: u8,
    pub flags: u8,
    pub sequence: u64,
    pub timestamp_ns: u64,
    pub sweep_index: u64,
    pub sample_count: u32,
    /// Interleaved left-justified samples, `2·sample_count` values.
    pub payload: Vec<i16>,
    pub crc32: u32,
}

impl Frame {
    pub fn launch_pol(&self) -> Polarization {
        if self.flags & FLAG_POL_Y != 0 {
            Polarization::Y
        } else {
            Polarization::X
        }
    }

    pub fn is_end(&self) -> bool {
        self.flags & FLAG_END != 0
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 4 * self.sample_count as usize + CRC_LEN
    }

    /// Restores right-justified `adc_bits` codes.
    pub fn to_capture(&self, adc_bits: u32) -> Result<SweepCapture, FrameError> {
        if !(2..=16).contains(&adc_bits) {
            return Err(FrameError::AdcBits(adc_bits));
        }
        let shift = 16 - adc_bits;
        let x = self.payload.chunks_exact(2).map(|p| p[0] >> shift).collect();
        let y = self.payload.chunks_exact(2).map(|p| p[1] >> shift).collect();
        Ok(SweepCapture {
            sweep_index: self.sweep_index,
            launch_pol: self.launch_pol(),
            timestamp_ns: self.timestamp_ns,
            adc_bits,
            channels: [x, y],
        })
    }
}

fn header(flags: u8, sequence: u64, timestamp_ns: u64, sweep_index: u64, count: u32, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(flags);
    out.extend_from_slice(&sequence.to_le_bytes());
    out.extend_from_slice(&timestamp_ns.to_le_bytes());
    out.extend_from_slice(&sweep_index.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
}

/// Appends the encoding of `capture` to `out`.
pub fn encode_frame_into(capture: &SweepCapture, sequence: u64, out: &mut Vec<u8>) -> Result<(), FrameError> {
    let [x, y] = &capture.channels;
    if x.len() != y.len() {
        return Err(FrameError::Channels(x.len(), y.len()));
    }
    if !(2..=16).contains(&capture.adc_bits) {
        return Err(FrameError::AdcBits(capture.adc_bits));
    }
    if x.len() as u64 > MAX_SAMPLES as u64 {
        return Err(FrameError::TooLarge(x.len() as u64));
    }
    let start = out.len();
    out.reserve(HEADER_LEN + 4 * x.len() + CRC_LEN);
    let flags = if capture.launch_pol == Polarization::Y { FLAG_POL_Y } else { 0 };
    header(flags, sequence, capture.timestamp_ns, capture.sweep_index, x.len() as u32, out);
    let shift = 16 - capture.adc_bits;
    let body = out.len();
    out.resize(body + 4 * x.len(), 0);
    for ((dst, a), b) in out[body..].chunks_exact_mut(4).zip(x).zip(y) {
        dst[..2].copy_from_slice(&((*a as u16) << shift).to_le_bytes());
        dst[2..].copy_from_slice(&((*b as u16) << shift).to_le_bytes());
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(())
}

pub fn encode_frame(capture: &SweepCapture, sequence: u64) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::new();
    encode_frame_into(capture, sequence, &mut out)?;
    Ok(out)
}

/// End-of-stream marker announcing `frames_sent` data frames.
pub fn encode_end(frames_sent: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + CRC_LEN);
    header(FLAG_END, frames_sent, 0, 0, 0, &mut out);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Header of a frame whose CRC checked out.
struct Checked {
    flags: u8,
    sequence: u64,
    timestamp_ns: u64,
    sweep_index: u64,
    count: u32,
    crc32: u32,
    len: usize,
}

fn check_frame(bytes: &[u8]) -> Result<Checked, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::NeedMore {
            needed: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(FrameError::UnsupportedVersion(bytes[4]));
    }
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let sequence = u64_at(6);
    let count = u32::from_le_bytes(bytes[30..34].try_into().unwrap());
    if count > MAX_SAMPLES {
        return Err(FrameError::TooLarge(count as u64));
    }
    let body = HEADER_LEN + 4 * count as usize;
    let len = body + CRC_LEN;
    if bytes.len() < len {
        return Err(FrameError::NeedMore {
            needed: len,
            have: bytes.len(),
        });
    }
    let stored = u32::from_le_bytes(bytes[body..len].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body]);
    if stored != computed {
        return Err(FrameError::Crc {
            sequence,
            computed,
            stored,
            len,
        });
    }
    Ok(Checked {
        flags: bytes[5],
        sequence,
        timestamp_ns: u64_at(14),
        sweep_index: u64_at(22),
        count,
        crc32: stored,
        len,
    })
}

/// Decodes the frame at the start of `bytes`, returning it and the number
/// of bytes it occupied.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    let h = check_frame(bytes)?;
    let payload = bytes[HEADER_LEN..h.len - CRC_LEN]
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok((
        Frame {
            version: VERSION,
            flags: h.flags,
            sequence: h.sequence,
            timestamp_ns: h.timestamp_ns,
            sweep_index: h.sweep_index,
            sample_count: h.count,
            payload,
            crc32: h.crc32,
        },
        h.len,
    ))
}

/// A frame decoded straight into its capture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    Data { sequence: u64, capture: SweepCapture },
    /// End-of-stream marker announcing `frames` data frames.
    End { frames: u64 },
}

/// Like [`decode_frame`] followed by [`Frame::to_capture`], without the
/// interleaved intermediate.
pub fn decode_capture(bytes: &[u8], adc_bits: u32) -> Result<(Decoded, usize), FrameError> {
    if !(2..=16).contains(&adc_bits) {
        return Err(FrameError::AdcBits(adc_bits));
    }
    let h = check_frame(bytes)?;
    if h.flags & FLAG_END != 0 {
        return Ok((Decoded::End { frames: h.sequence }, h.len));
    }
    let shift = 16 - adc_bits;
    let samples = &bytes[HEADER_LEN..h.len - CRC_LEN];
    let n = h.count as usize;
    let (mut x, mut y) = (vec![0i16; n], vec![0i16; n]);
    for ((c, a), b) in samples.chunks_exact(4).zip(&mut x).zip(&mut y) {
        *a = i16::from_le_bytes([c[0], c[1]]) >> shift;
        *b = i16::from_le_bytes([c[2], c[3]]) >> shift;
    }
    let capture = SweepCapture {
        sweep_index: h.sweep_index,
        launch_pol: if h.flags & FLAG_POL_Y != 0 {
            Polarization::Y
        } else {
            Polarization::X
        },
        timestamp_ns: h.timestamp_ns,
        adc_bits,
        channels: [x, y],
    };
    Ok((
        Decoded::Data {
            sequence: h.sequence,
            capture,
        },
        h.len,
    ))
}
