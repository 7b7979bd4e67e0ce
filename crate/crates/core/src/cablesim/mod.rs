//! Submarine cable channel: spans, repeaters with loopback couplers, laser
//! phase noise, ASE and injectable perturbations.

mod cable;
mod calibrate;
mod laser;
mod propagate;

pub use cable::{
    CableModel, PerturbationEvent, PerturbationKind, PerturbationTarget, RepeaterModel, SpanModel,
    C_BAND_CARRIER_HZ, SPEED_OF_LIGHT_KM_S,
};
pub use calibrate::{calibrate_noise_floor, measure_snr, NoiseCalibration};
pub use laser::{default_stabilization, synth_laser_phase, GainBand, LaserKind, LaserModel, LaserTrack};
pub use propagate::{propagate, FrontEnd, SimOptions, Simulator};

/// Eight 10 km spans with gain matched to span loss.
pub fn transatlantic_mini(seed: u64) -> CableModel {
    CableModel::uniform(8, 10.0, seed).expect("valid preset")
}

/// Eighty 80 km spans. Needs a sweep period above the ~62.7 ms round trip.
pub fn transatlantic_full(seed: u64) -> CableModel {
    CableModel::uniform(80, 80.0, seed).expect("valid preset")
}
