//! Coherent optical frequency-domain reflectometry for repeatered submarine
//! cables: probe generation, a cable channel simulator, the receiver DSP,
//! analysis products, a sequenced capture stream and a command-line driver.

pub mod analysis;
pub mod cablesim;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod jones;
mod rng;
pub mod scenario;
pub mod stream;
pub mod waveform;

pub use error::{Error, Result};
