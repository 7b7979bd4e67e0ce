//! Opposite slow delay drifts on spans 3 and 4 are tracked per repeater and
//! flagged as anti-correlated movement.

use ofdr::analysis::{delay_series, span_movement_report, MovementConfig};
use ofdr::cablesim::{transatlantic_mini, PerturbationEvent, SimOptions, Simulator};
use ofdr::dsp::{process_captures, ReceiverConfig};
use ofdr::waveform::SweepConfig;

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(2).with_uniform_ase(1e-13)?.with_events(vec![
        PerturbationEvent::delay_drift(3, 5.0, 0.0, 40.0),
        PerturbationEvent::delay_drift(4, -5.0, 0.0, 40.0),
    ])?;
    let sim = Simulator::new(cfg.clone(), cable, None, 41.0, 9, SimOptions::default())?;
    // one X/Y pair every second
    let sweeps: Vec<u64> = (0..41).flat_map(|i| [i * 1000, i * 1000 + 1]).collect();
    let obs = process_captures(&cfg, &sim.expected_delays(), ReceiverConfig::default(), sim.captures(&sweeps)?)?;
    let series: Vec<_> = (1..=8).map(|k| delay_series(&obs, k)).collect();
    for s in &series {
        let rel = s.relative_ns();
        println!("repeater {}: {} points, final change {:+.2} ns", s.repeater, s.len(), rel.last().unwrap_or(&0.0));
    }
    let report = span_movement_report(&series, &MovementConfig::default())?;
    for f in &report.flagged {
        println!("flagged spans {:?}: correlation {:.3}", f.spans, f.correlation);
    }
    Ok(())
}
