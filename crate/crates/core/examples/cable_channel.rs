//! Builds the eight-span cable, prints its round-trip geometry and
//! simulates one received sweep.

use ofdr::cablesim::{transatlantic_mini, SimOptions, Simulator};
use ofdr::waveform::SweepConfig;

fn main() -> ofdr::Result<()> {
    let cable = transatlantic_mini(1).with_random_birefringence().with_uniform_ase(1e-12)?;
    for k in 1..=cable.len() {
        let j = cable.roundtrip_jones(k, 0.0)?;
        println!(
            "repeater {k}: delay {:.3} us, amplitude {:.3e}, |J^H J - I| {:.1e}",
            cable.roundtrip_delay(k, 0.0)? * 1e6,
            cable.roundtrip_amplitude(k)?,
            j.normalized().unitarity_deviation()
        );
    }
    let sim = Simulator::new(SweepConfig::desk(), cable, None, 0.01, 7, SimOptions::default())?;
    let c = sim.capture(0)?;
    let peak = c.channels.iter().flatten().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    println!(
        "capture 0: {} samples per channel, peak code {peak} of {}",
        c.len(),
        1u32 << (c.adc_bits - 1)
    );
    Ok(())
}
