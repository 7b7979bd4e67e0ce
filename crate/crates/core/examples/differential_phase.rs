//! A 2 rad, 1 Hz disturbance on span 5 shows up in every integrated phase
//! from repeater 5 on, but only in the span-5 differential phase.

use ofdr::cablesim::{transatlantic_mini, PerturbationEvent, SimOptions, Simulator};
use ofdr::dsp::{differential_phase, phase_series, PhaseConvention, PhaseSeries, Receiver, ReceiverConfig};
use ofdr::waveform::SweepConfig;

fn rms(s: &PhaseSeries) -> f64 {
    let m = s.values.iter().sum::<f64>() / s.len() as f64;
    (s.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
}

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(3)
        .with_uniform_ase(1e-12)?
        .with_events(vec![PerturbationEvent::sinusoid(5, 2.0, 1.0)])?;
    let sim = Simulator::new(cfg.clone(), cable, None, 1.0, 5, SimOptions::default())?;
    let mut rx = Receiver::new(&cfg, &sim.expected_delays(), ReceiverConfig::default())?;
    let mut obs = Vec::new();
    for start in (0..1000).step_by(64) {
        obs.extend(rx.push_batch(sim.capture_range(start, 64.min(1000 - start))?)?);
    }
    obs.extend(rx.finish()?);
    let phases: Vec<PhaseSeries> = (1..=8)
        .map(|k| phase_series(&obs, k, PhaseConvention::LargestElement, cfg.sweep_period))
        .collect();
    for (i, (p, d)) in phases.iter().zip(differential_phase(&phases)).enumerate() {
        println!("k={}: rms integrated {:.3} rad, rms differential {:.3} rad", i + 1, rms(p), rms(&d));
    }
    Ok(())
}
