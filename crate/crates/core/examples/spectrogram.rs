//! Spectrogram of the span differential phase while a 5 Hz disturbance
//! switches on halfway through the run.

use ofdr::analysis::{spectrogram, SpectrogramConfig};
use ofdr::cablesim::{transatlantic_mini, PerturbationEvent, SimOptions, Simulator};
use ofdr::dsp::{differential_phase, phase_series, PhaseConvention, Receiver, ReceiverConfig};
use ofdr::waveform::SweepConfig;

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let mut tone = PerturbationEvent::sinusoid(2, 1.0, 5.0);
    tone.start = 1.0;
    let cable = transatlantic_mini(4).with_uniform_ase(1e-12)?.with_events(vec![tone])?;
    let sim = Simulator::new(cfg.clone(), cable, None, 2.0, 1, SimOptions::default())?;
    let mut rx = Receiver::new(&cfg, &sim.expected_delays(), ReceiverConfig::default())?;
    let mut obs = Vec::new();
    for start in (0..2000).step_by(64) {
        obs.extend(rx.push_batch(sim.capture_range(start, 64.min(2000 - start))?)?);
    }
    obs.extend(rx.finish()?);
    let phases: Vec<_> = (1..=2)
        .map(|k| phase_series(&obs, k, PhaseConvention::LargestElement, cfg.sweep_period))
        .collect();
    let span2 = &differential_phase(&phases)[1];
    let sc = SpectrogramConfig {
        band: Some((0.5, 20.0)),
        overlap: 0.75,
        ..SpectrogramConfig::for_resolution(span2.sample_rate, 1.0)
    };
    let grid = spectrogram(span2, &sc)?;
    for c in 0..grid.columns() {
        let peak = grid.power_db[c].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("t {:.2} s: ridge {:.1} Hz at {peak:.1} dB", grid.times[c], grid.ridge(c).unwrap_or(0.0));
    }
    Ok(())
}
