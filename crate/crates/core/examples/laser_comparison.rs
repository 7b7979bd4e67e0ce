//! Compares free-running and cavity-stabilized lasers through the delayed
//! self-heterodyne seen by the farthest repeater.

use ofdr::analysis::{frequency_noise_psd_raw, psd_ratio_db, WelchConfig};
use ofdr::cablesim::{synth_laser_phase, transatlantic_mini, LaserModel};

fn main() -> ofdr::Result<()> {
    let fs = 4000.0;
    let n = 1 << 18;
    let tau = transatlantic_mini(1).roundtrip_delay(8, 0.0)?;
    let lag = (tau * fs).round() as usize;
    let welch = WelchConfig::default();
    let psd = |m: &LaserModel| -> ofdr::Result<_> {
        let p = synth_laser_phase(m, n, fs, 21)?;
        let d: Vec<f64> = (lag..n).map(|i| p[i] - p[i - lag]).collect();
        frequency_noise_psd_raw(&d, fs, &[], &welch)
    };
    let free = psd(&LaserModel::free_running())?;
    let stab = psd(&LaserModel::cavity_stabilized())?;
    let bands = [(0.1, 0.9), (1.0, 10.0), (10.0, 1e3)];
    for ((lo, hi), r) in bands.iter().zip(psd_ratio_db(&stab, &free, &bands)) {
        match r {
            Some(db) => println!("{lo}-{hi} Hz: stabilized {db:+.2} dB"),
            None => println!("{lo}-{hi} Hz: no bins"),
        }
    }
    Ok(())
}
