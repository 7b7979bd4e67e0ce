//! Finds the ASE density that gives 20 dB per-repeater SNR after 32 ms of
//! averaging, then checks it with an independent seed.

use ofdr::cablesim::{calibrate_noise_floor, measure_snr, transatlantic_mini};
use ofdr::waveform::SweepConfig;

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(1);
    let cal = calibrate_noise_floor(&cable, &cfg, 20.0, 0.032, 5)?;
    println!(
        "density {:.4e} /Hz after {} iterations, mean {:.2} dB",
        cal.density, cal.iterations, cal.achieved_snr_db
    );
    let check = measure_snr(&cable.with_uniform_ase(cal.density)?, &cfg, 16, 99)?;
    let text: Vec<String> = check.iter().map(|s| format!("{s:.1}")).collect();
    println!("re-measured per repeater: [{}] dB", text.join(", "));
    Ok(())
}
