//! Compresses two consecutive captures with the aligned matched filter and
//! locates the repeater loopback peaks.

use ofdr::cablesim::{transatlantic_mini, SimOptions, Simulator};
use ofdr::dsp::{detect_peaks, estimate_delay_subsample, estimate_snr, MatchedFilter};
use ofdr::waveform::{generate_sweep, SweepConfig};

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(1).with_uniform_ase(1e-12)?;
    let sim = Simulator::new(cfg.clone(), cable.clone(), None, 0.01, 3, SimOptions::default())?;
    let mf = MatchedFilter::new(&cfg, &generate_sweep(&cfg, 0)?)?;
    let ir = mf.aligned(&sim.capture(0)?, &sim.capture(1)?)?;

    let expected = sim.expected_delays();
    let peaks = detect_peaks(&ir, Some(&expected), 10.0);
    let bins: Vec<usize> = peaks.iter().map(|p| p.bin).collect();
    let snr = estimate_snr(&ir, &bins);
    for (k, p) in peaks.iter().enumerate() {
        let est = estimate_delay_subsample(&ir, p.bin)?;
        let truth = cable.roundtrip_delay(k + 1, 0.0)?;
        println!(
            "repeater {}: bin {}, delay error {:+.2} ns, SNR {:.1} dB",
            k + 1,
            p.bin,
            (est - truth) * 1e9,
            snr.per_peak[k].snr_db
        );
    }
    Ok(())
}
