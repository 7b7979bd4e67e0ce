//! Frame transport over a reliable byte stream.

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{sync_channel, Receiver as ChannelReceiver};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::frame::{decode_capture, encode_end, encode_frame_into, Decoded, FrameError, CRC_LEN, HEADER_LEN, MAGIC, MAX_SAMPLES};
use crate::dsp::SweepCapture;
use crate::error::{Error, Result};

/// Overrides the port of every endpoint resolved through
/// [`resolve_endpoint`].
pub const PORT_ENV: &str = "OFDR_STREAM_PORT";

const READ_CHUNK: usize = 1 << 18;

/// Applies the `OFDR_STREAM_PORT` override to a `host:port` endpoint.
pub fn resolve_endpoint(endpoint: &str) -> String {
    match std::env::var(PORT_ENV) {
        Ok(port) if !port.trim().is_empty() => {
            let host = endpoint.rsplit_once(':').map(|(h, _)| h).unwrap_or(endpoint);
            format!("{host}:{}", port.trim())
        }
        _ => endpoint.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamEvent {
    Capture { sequence: u64, capture: SweepCapture },
    /// Sequences `first..=last` never arrived.
    Gap { first: u64, last: u64 },
    /// A frame with an intact header failed validation.
    Rejected { sequence: u64, reason: String },
}

/// Accounting for one consumed stream.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub captures: u64,
    /// Missing sequence numbers.
    pub gaps: Vec<u64>,
    /// Sequence numbers of rejected frames.
    pub rejects: Vec<u64>,
    /// Data frame count announced by the end-of-stream marker.
    pub declared_frames: Option<u64>,
    /// End marker seen; false means the connection dropped early.
    pub complete: bool,
    /// Bytes discarded while resynchronizing on the magic.
    pub skipped_bytes: u64,
}

impl GapReport {
    /// `frames_in = captures + gaps + rejects` against the announced count.
    pub fn conserved(&self) -> bool {
        match self.declared_frames {
            Some(n) => n == self.captures + self.gaps.len() as u64 + self.rejects.len() as u64,
            None => false,
        }
    }
}

/// Incremental frame decoder over any reader.
pub struct FrameReader<R> {
    reader: R,
    adc_bits: u32,
    buf: Vec<u8>,
    pos: usize,
    expected: u64,
    queued: VecDeque<StreamEvent>,
    report: GapReport,
    done: bool,
}

impl<R: Read> FrameReader<R> {
    pub fn new(reader: R, adc_bits: u32) -> Self {
        FrameReader {
            reader,
            adc_bits,
            buf: Vec::with_capacity(2 * READ_CHUNK),
            pos: 0,
            expected: 0,
            queued: VecDeque::new(),
            report: GapReport::default(),
            done: false,
        }
    }

    pub fn report(&self) -> &GapReport {
        &self.report
    }

    pub fn into_report(self) -> GapReport {
        self.report
    }

    fn fill(&mut self) -> Result<bool> {
        if self.pos > 0 && self.pos * 2 >= self.buf.len() {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        let old = self.buf.len();
        self.buf.resize(old + READ_CHUNK, 0);
        let got = loop {
            match self.reader.read(&mut self.buf[old..]) {
                Ok(n) => break n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.buf.truncate(old);
                    return Err(e.into());
                }
            }
        };
        self.buf.truncate(old + got);
        Ok(got > 0)
    }

    fn note_sequence(&mut self, seq: u64) {
        if seq > self.expected {
            self.report.gaps.extend(self.expected..seq);
            self.queued.push_back(StreamEvent::Gap {
                first: self.expected,
                last: seq - 1,
            });
        }
        self.expected = self.expected.max(seq + 1);
    }

    fn resync(&mut self) {
        let from = self.pos + 1;
        let next = self.buf[from.min(self.buf.len())..]
            .windows(MAGIC.len())
            .position(|w| w == MAGIC)
            .map(|p| from + p)
            .unwrap_or_else(|| self.buf.len().saturating_sub(MAGIC.len() - 1).max(from.min(self.buf.len())));
        self.report.skipped_bytes += (next - self.pos) as u64;
        self.pos = next;
    }

    /// Next event, or `None` at end of stream.
    pub fn next_event(&mut self) -> Result<Option<StreamEvent>> {
        loop {
            if let Some(ev) = self.queued.pop_front() {
                return Ok(Some(ev));
            }
            if self.done {
                return Ok(None);
            }
            match decode_capture(&self.buf[self.pos..], self.adc_bits) {
                Ok((Decoded::End { frames }, used)) => {
                    self.pos += used;
                    self.note_sequence(frames);
                    self.report.declared_frames = Some(frames);
                    self.report.complete = true;
                    self.done = true;
                }
                Ok((Decoded::Data { sequence, capture }, used)) => {
                    self.pos += used;
                    if sequence < self.expected {
                        self.report.rejects.push(sequence);
                        self.queued.push_back(StreamEvent::Rejected {
                            sequence,
                            reason: "sequence not increasing".into(),
                        });
                        continue;
                    }
                    self.note_sequence(sequence);
                    self.report.captures += 1;
                    self.queued.push_back(StreamEvent::Capture { sequence, capture });
                }
                Err(FrameError::NeedMore { .. }) => {
                    if !self.fill()? {
                        let rest = self.buf.len() - self.pos;
                        self.report.skipped_bytes += rest as u64;
                        self.pos = self.buf.len();
                        self.done = true;
                    }
                }
                Err(FrameError::Crc { sequence, len, .. }) => {
                    self.pos += len;
                    if sequence < self.expected {
                        continue;
                    }
                    self.note_sequence(sequence);
                    self.report.rejects.push(sequence);
                    self.queued.push_back(StreamEvent::Rejected {
                        sequence,
                        reason: "CRC mismatch".into(),
                    });
                }
                Err(e @ FrameError::AdcBits(_)) => return Err(e.into()),
                Err(_) => self.resync(),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServeStats {
    pub frames: u64,
    pub bytes: u64,
}

/// Writes every capture as a frame (sequence numbers from 0), then the end
/// marker. Blocking writes propagate backpressure to the source.
pub fn write_stream<W, I>(writer: W, source: I) -> Result<ServeStats>
where
    W: Write,
    I: IntoIterator<Item = Result<SweepCapture>>,
{
    let mut w = BufWriter::with_capacity(READ_CHUNK, writer);
    let mut stats = ServeStats::default();
    let mut buf = Vec::new();
    for capture in source {
        let capture = capture?;
        buf.clear();
        encode_frame_into(&capture, stats.frames, &mut buf)?;
        w.write_all(&buf)?;
        stats.frames += 1;
        stats.bytes += buf.len() as u64;
    }
    let end = encode_end(stats.frames);
    w.write_all(&end)?;
    stats.bytes += end.len() as u64;
    w.flush()?;
    Ok(stats)
}

/// Accepts one connection on `listener` and streams `source` to it.
pub fn serve<I>(listener: &TcpListener, source: I) -> Result<ServeStats>
where
    I: IntoIterator<Item = Result<SweepCapture>>,
{
    let (sock, _) = listener.accept()?;
    sock.set_nodelay(true)?;
    write_stream(sock, source)
}

/// Receiving side of a stream: a decoder thread feeding a bounded queue of
/// `queue_depth` events.
pub struct Consumer {
    rx: ChannelReceiver<Result<StreamEvent>>,
    handle: Option<JoinHandle<GapReport>>,
}

impl Consumer {
    pub fn from_reader<R: Read + Send + 'static>(reader: R, adc_bits: u32, queue_depth: usize) -> Self {
        let (tx, rx) = sync_channel(queue_depth.max(1));
        let handle = std::thread::spawn(move || {
            let mut fr = FrameReader::new(reader, adc_bits);
            loop {
                match fr.next_event() {
                    Ok(Some(ev)) => {
                        if tx.send(Ok(ev)).is_err() {
                            break;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
            fr.into_report()
        });
        Consumer {
            rx,
            handle: Some(handle),
        }
    }

    /// Drains what is left and returns the accounting.
    pub fn finish(mut self) -> GapReport {
        for _ in self.rx.iter() {}
        self.handle
            .take()
            .map(|h| h.join().unwrap_or_default())
            .unwrap_or_default()
    }
}

impl Iterator for Consumer {
    type Item = Result<StreamEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        self.rx.recv().ok()
    }
}

/// Connects to `endpoint` (after the port override) and starts consuming.
pub fn consume(endpoint: &str, adc_bits: u32, queue_depth: usize) -> Result<Consumer> {
    let sock = TcpStream::connect(resolve_endpoint(endpoint))?;
    sock.set_nodelay(true)?;
    Ok(Consumer::from_reader(sock, adc_bits, queue_depth))
}

/// Frames to drop or corrupt, by sequence number.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    pub drop: BTreeSet<u64>,
    pub corrupt: BTreeSet<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProxyStats {
    pub forwarded: u64,
    pub dropped: u64,
    pub corrupted: u64,
}

/// Forwards frames from `reader` to `writer`, applying `faults`. Framing is
/// taken from each header; the stream must start on a frame boundary.
pub fn relay<R: Read, W: Write>(mut reader: R, writer: W, faults: &Faults) -> Result<ProxyStats> {
    let mut w = BufWriter::with_capacity(READ_CHUNK, writer);
    let mut stats = ProxyStats::default();
    let mut frame = Vec::new();
    loop {
        frame.resize(HEADER_LEN, 0);
        match reader.read_exact(&mut frame[..]) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        if frame[0..4] != MAGIC {
            return Err(Error::Malformed("relay lost frame alignment".into()));
        }
        let count = u32::from_le_bytes(frame[30..34].try_into().unwrap());
        if count > MAX_SAMPLES {
            return Err(Error::Malformed("relay saw oversized frame".into()));
        }
        let len = HEADER_LEN + 4 * count as usize + CRC_LEN;
        frame.resize(len, 0);
        reader.read_exact(&mut frame[HEADER_LEN..])?;
        let seq = u64::from_le_bytes(frame[6..14].try_into().unwrap());
        let is_end = frame[5] & super::frame::FLAG_END != 0;
        if !is_end && faults.drop.contains(&seq) {
            stats.dropped += 1;
            continue;
        }
        if !is_end && faults.corrupt.contains(&seq) {
            let at = if count > 0 { HEADER_LEN } else { len - 1 };
            frame[at] ^= 0x01;
            stats.corrupted += 1;
        }
        w.write_all(&frame)?;
        stats.forwarded += 1;
    }
    w.flush()?;
    Ok(stats)
}

/// Starts a one-connection fault-injecting proxy in front of `upstream`.
/// Returns the proxy's listening address.
pub fn spawn_fault_proxy(
    upstream: SocketAddr,
    faults: Faults,
) -> Result<(SocketAddr, JoinHandle<Result<ProxyStats>>)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let handle = std::thread::spawn(move || {
        let (down, _) = listener.accept()?;
        let up = TcpStream::connect(upstream)?;
        relay(up, down, &faults)
    });
    Ok((addr, handle))
}
