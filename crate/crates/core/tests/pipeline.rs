use num_complex::Complex64;

use ofdr::cablesim::{calibrate_noise_floor, measure_snr, transatlantic_mini, SimOptions, Simulator};
use ofdr::dsp::{phase_series, process_captures, ObservationFlags, PhaseConvention, ReceiverConfig};
use ofdr::jones::Jones;
use ofdr::waveform::{Polarization, SweepConfig};

/// `|⟨A, B⟩| / (‖A‖·‖B‖)`: 1 when the matrices agree up to a complex scale.
fn alignment(a: &Jones, b: &Jones) -> f64 {
    let dot: Complex64 = a.elements().iter().zip(b.elements()).map(|(x, y)| x * y.conj()).sum();
    dot.norm() / (a.norm_sqr() * b.norm_sqr()).sqrt()
}

#[test]
fn receiver_recovers_delays_and_jones() {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(4)
        .with_random_birefringence()
        .with_uniform_ase(1e-13)
        .unwrap();
    let sim = Simulator::new(cfg.clone(), cable.clone(), None, 0.02, 3, SimOptions::default()).unwrap();
    let obs = process_captures(&cfg, &sim.expected_delays(), ReceiverConfig::default(), sim.capture_range(0, 12).unwrap())
        .unwrap();
    assert_eq!(obs.len(), 12 * 8);
    for o in &obs {
        let truth = cable.roundtrip_delay(o.repeater, o.timestamp).unwrap();
        // circular filtering folds in the previous sweep's tail: half a bin
        let tol = if o.flags.contains(ObservationFlags::UNALIGNED) { 0.5 / cfg.sample_rate } else { 2e-9 };
        assert!((o.delay_est - truth).abs() < tol, "m{} k{} {:e}", o.sweep_index, o.repeater, o.delay_est - truth);
        assert!(!o.flags.contains(ObservationFlags::MISSING));
        // the pair's matrix is only clean when both columns were aligned
        let partner_aligned = obs
            .iter()
            .filter(|p| p.repeater == o.repeater && p.sweep_index == (o.sweep_index | 1))
            .all(|p| !p.flags.contains(ObservationFlags::UNALIGNED));
        if o.is_paired() && partner_aligned && !o.flags.contains(ObservationFlags::UNALIGNED) {
            let j = cable.roundtrip_jones(o.repeater, o.timestamp).unwrap();
            assert!(alignment(&o.jones, &j) > 0.999, "k{} {}", o.repeater, alignment(&o.jones, &j));
        }
    }
    // the last sweep has no successor and is filtered circularly
    assert!(obs
        .iter()
        .filter(|o| o.sweep_index == 11)
        .all(|o| o.flags.contains(ObservationFlags::UNALIGNED)));
}

#[test]
fn gap_restarts_phase_series() {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(1).with_uniform_ase(1e-13).unwrap();
    let sim = Simulator::new(cfg.clone(), cable, None, 0.05, 3, SimOptions::default()).unwrap();
    let mut sweeps: Vec<u64> = (0..10).collect();
    sweeps.extend(20..30);
    let obs =
        process_captures(&cfg, &sim.expected_delays(), ReceiverConfig::default(), sim.captures(&sweeps).unwrap()).unwrap();
    assert!(obs
        .iter()
        .filter(|o| o.sweep_index == 20)
        .all(|o| o.flags.contains(ObservationFlags::DISCONTINUITY)));
    let s = phase_series(&obs, 3, PhaseConvention::LargestElement, cfg.sweep_period);
    assert_eq!(s.resets, vec![4]);
    assert_eq!(s.segments().len(), 2);
    assert!(s.sweep_indices.iter().all(|m| m % 2 == 1));
    assert!(obs.iter().all(|o| o.launch_pol == if o.sweep_index % 2 == 0 { Polarization::X } else { Polarization::Y }));
}

#[test]
fn calibration_hits_target_at_short_averaging() {
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(1);
    // 16 sweeps per polarization: simulated directly, no extrapolation
    let cal = calibrate_noise_floor(&cable, &cfg, 20.0, 0.032, 5).unwrap();
    assert!((cal.achieved_snr_db - 20.0).abs() <= 0.05, "{cal:?}");
    let check = measure_snr(&cable.with_uniform_ase(cal.density).unwrap(), &cfg, 16, 6).unwrap();
    let mean = check.iter().sum::<f64>() / check.len() as f64;
    assert!((mean - 20.0).abs() < 1.0, "{check:?}");
}

#[test]
fn unreachable_target_is_reported() {
    let cfg = SweepConfig::desk();
    assert!(calibrate_noise_floor(&transatlantic_mini(1), &cfg, 90.0, 0.004, 1).is_err());
}
