//! Generates the desk probe, quantizes it for the DAC and reports the
//! spectral and envelope invariants.

use ofdr::waveform::{envelope_ripple_db, generate_sweep, out_of_band_dbc, pol_multiplex, quantize_probe, SweepConfig};

fn main() -> ofdr::Result<()> {
    let cfg = SweepConfig::desk();
    let (lo, hi) = cfg.band();
    println!(
        "{} samples/sweep, band {:.1}-{:.1} MHz, sweep rate {:.3e} Hz/s",
        cfg.samples_per_sweep(),
        lo / 1e6,
        hi / 1e6,
        cfg.sweep_rate()
    );
    for m in 0..4 {
        let p = generate_sweep(&cfg, m)?;
        let q = quantize_probe(&p, cfg.dac_bits)?;
        println!(
            "sweep {m} ({:?}): ripple {:.4} dB ideal / {:.4} dB at {} bits, out-of-band {:.1} dBc",
            pol_multiplex(&cfg, m),
            envelope_ripple_db(&p.samples),
            q.envelope_ripple_db(),
            cfg.dac_bits,
            out_of_band_dbc(&q.to_complex(), &cfg)?
        );
    }
    Ok(())
}
