//! Sequenced framing of raw captures over a byte stream, with gap
//! detection and backpressure.

mod frame;
mod transport;

pub use frame::{
    decode_capture, decode_frame, encode_end, encode_frame, encode_frame_into, Decoded, Frame, FrameError, CRC_LEN, FLAG_END, FLAG_POL_Y,
    HEADER_LEN, MAGIC, MAX_SAMPLES, VERSION,
};
pub use transport::{
    consume, relay, resolve_endpoint, serve, spawn_fault_proxy, write_stream, Consumer, Faults, FrameReader,
    GapReport, ProxyStats, ServeStats, StreamEvent, PORT_ENV,
};
