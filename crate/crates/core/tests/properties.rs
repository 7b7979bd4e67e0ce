use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use ofdr::dsp::records::{decode_binary, encode_binary, from_json_line, to_json_line};
use ofdr::dsp::{
    circular_xcorr, differential_phase, unwrap_phases, wrap, ObservationFlags, PhaseSeries, RepeaterObservation,
    SweepCapture,
};
use ofdr::jones::Jones;
use ofdr::stream::{decode_capture, decode_frame, encode_frame, relay, write_stream, Faults, FrameReader};
use ofdr::waveform::{generate_sweep, pol_multiplex, quantize, Polarization, SweepConfig};

fn pol(m: u64) -> Polarization {
    if m % 2 == 0 {
        Polarization::X
    } else {
        Polarization::Y
    }
}

prop_compose! {
    fn capture()(bits in 2u32..=16, n in 0usize..48, m in any::<u64>(), ts in any::<u64>(), seed in any::<u64>())
        -> SweepCapture {
        let half = 1i64 << (bits - 1);
        let code = |i: usize, c: u64| {
            let h = seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64) << 1 | c);
            ((h >> 17) as i64).rem_euclid(2 * half) - half
        };
        SweepCapture {
            sweep_index: m,
            launch_pol: pol(m),
            timestamp_ns: ts,
            adc_bits: bits,
            channels: [
                (0..n).map(|i| code(i, 0) as i16).collect(),
                (0..n).map(|i| code(i, 1) as i16).collect(),
            ],
        }
    }
}

fn angle() -> impl Strategy<Value = f64> {
    -10.0f64..10.0
}

prop_compose! {
    fn unitary()(a in angle(), b in angle(), c in angle(), d in angle()) -> Jones {
        Jones::unitary(a, b, c, d)
    }
}

prop_compose! {
    fn observation()(k in 1usize..100, m in any::<u32>(), t in 0.0f64..1e5, re in prop::array::uniform8(-2.0f64..2.0),
        d in 0.0f64..0.07, snr in -20.0f64..60.0, flags in 0u32..128) -> RepeaterObservation {
        RepeaterObservation {
            repeater: k,
            sweep_index: m as u64,
            launch_pol: pol(m as u64),
            timestamp: t,
            jones: Jones::from_reals(re),
            delay_est: d,
            nominal_delay: d + 1e-9,
            intensity_db: -snr,
            snr_db: snr,
            measurement_bandwidth_hz: 500.0,
            flags: ObservationFlags(flags),
        }
    }
}

proptest! {
    #[test]
    fn frame_roundtrip(c in capture(), seq in any::<u64>()) {
        let bytes = encode_frame(&c, seq).unwrap();
        let (f, used) = decode_frame(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(f.sequence, seq);
        prop_assert_eq!(&f.to_capture(c.adc_bits).unwrap(), &c);
        let (d, used) = decode_capture(&bytes, c.adc_bits).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(d, ofdr::stream::Decoded::Data { sequence: seq, capture: c });
    }

    #[test]
    fn any_single_bit_flip_is_detected(c in capture(), bit in any::<prop::sample::Index>()) {
        let mut bytes = encode_frame(&c, 3).unwrap();
        let i = bit.index(bytes.len() * 8);
        bytes[i / 8] ^= 1 << (i % 8);
        prop_assert!(decode_frame(&bytes).is_err());
    }

    #[test]
    fn decoder_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_frame(&bytes);
        let mut r = FrameReader::new(&bytes[..], 14);
        let mut n = 0;
        while let Ok(Some(_)) = r.next_event() {
            n += 1;
            prop_assert!(n <= bytes.len());
        }
    }

    #[test]
    fn dropped_and_corrupted_frames_are_accounted(
        total in 1u64..40,
        drop in prop::collection::btree_set(0u64..40, 0..8),
        corrupt in prop::collection::btree_set(0u64..40, 0..8),
    ) {
        let caps: Vec<SweepCapture> = (0..total)
            .map(|m| SweepCapture {
                sweep_index: m,
                launch_pol: pol(m),
                timestamp_ns: m,
                adc_bits: 12,
                channels: [vec![m as i16; 5], vec![-(m as i16); 5]],
            })
            .collect();
        let mut wire = Vec::new();
        write_stream(&mut wire, caps.into_iter().map(Ok)).unwrap();
        let drop: std::collections::BTreeSet<u64> = drop.into_iter().filter(|&s| s < total).collect();
        let corrupt: std::collections::BTreeSet<u64> =
            corrupt.into_iter().filter(|&s| s < total && !drop.contains(&s)).collect();
        let expect_missing = (drop.len() + corrupt.len()) as u64;
        let mut relayed = Vec::new();
        let faults = Faults { drop: drop.clone(), corrupt: corrupt.clone() };
        relay(&wire[..], &mut relayed, &faults).unwrap();
        let mut r = FrameReader::new(&relayed[..], 12);
        while r.next_event().unwrap().is_some() {}
        let rep = r.into_report();
        prop_assert!(rep.conserved());
        prop_assert!(rep.complete);
        prop_assert_eq!(rep.gaps, drop.into_iter().collect::<Vec<_>>());
        prop_assert_eq!(rep.rejects, corrupt.iter().copied().collect::<Vec<_>>());
        prop_assert_eq!(rep.captures, total - expect_missing);
    }

    #[test]
    fn quantizer_stays_in_range_and_is_monotone(
        mut x in prop::collection::vec(-3.0f64..3.0, 1..64),
        bits in 2u32..=16,
        fs in 0.1f64..4.0,
    ) {
        x.sort_by(f64::total_cmp);
        let q = quantize(&x, bits, fs).unwrap();
        let half = 1i32 << (bits - 1);
        prop_assert!(q.codes.iter().all(|&c| c >= -half && c < half));
        prop_assert!(q.codes.windows(2).all(|w| w[0] <= w[1]));
        let step = fs / half as f64;
        for (&v, &c) in x.iter().zip(&q.codes) {
            if v.abs() < fs - step {
                prop_assert!((c as f64 * step - v).abs() <= step / 2.0 + 1e-12);
            }
        }
        prop_assert_eq!(q.clipped, x.iter().filter(|&&v| (v / step).round() >= half as f64 || (v / step).round() < -half as f64).count());
    }

    #[test]
    fn wrap_lands_in_half_open_interval(x in -1e4f64..1e4) {
        let w = wrap(x);
        prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
        prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn unwrap_recovers_slow_phase(steps in prop::collection::vec(-3.0f64..3.0, 1..200), start in -50.0f64..50.0) {
        let mut truth = vec![start];
        for s in &steps {
            truth.push(truth.last().unwrap() + s);
        }
        let wrapped: Vec<f64> = truth.iter().map(|&p| wrap(p)).collect();
        let un = unwrap_phases(&wrapped);
        let offset = truth[0] - un[0];
        prop_assert!((offset / TAU - (offset / TAU).round()).abs() < 1e-9);
        for (u, t) in un.iter().zip(&truth) {
            prop_assert!((u + offset - t).abs() < 1e-6);
        }
    }

    #[test]
    fn jones_products_stay_unitary(js in prop::collection::vec(unitary(), 1..20)) {
        let mut p = Jones::identity();
        for j in &js {
            prop_assert!(j.unitarity_deviation() < 1e-12);
            p = p * *j;
        }
        prop_assert!(p.unitarity_deviation() < 1e-10);
        prop_assert!((p.det().norm() - 1.0).abs() < 1e-10);
        // round trip through the adjoint is the identity
        let id = p.adjoint() * p;
        prop_assert!((id.trace() - Complex64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn differential_phase_telescopes(
        values in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 16), 1..8),
    ) {
        let series: Vec<PhaseSeries> = values
            .iter()
            .enumerate()
            .map(|(i, v)| PhaseSeries {
                repeater: i + 1,
                sample_rate: 500.0,
                sweep_indices: (0..16).map(|j| 2 * j + 1).collect(),
                times: (0..16).map(|j| j as f64 * 2e-3).collect(),
                values: v.clone(),
                ..Default::default()
            })
            .collect();
        let d = differential_phase(&series);
        let last = series.len() - 1;
        for j in 0..16 {
            let sum: f64 = d.iter().map(|s| s.values[j]).sum();
            prop_assert!((sum - series[last].values[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn xcorr_matches_direct_sum(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..96),
    ) {
        let a: Vec<Complex64> = pairs.iter().map(|p| Complex64::new(p.0, p.1)).collect();
        let b: Vec<Complex64> = pairs.iter().map(|p| Complex64::new(p.2, p.3)).collect();
        let n = a.len();
        let c = circular_xcorr(&a, &b).unwrap();
        for l in 0..n {
            let direct: Complex64 = (0..n).map(|t| a[(t + l) % n] * b[t].conj()).sum();
            prop_assert!((c[l] - direct).norm() < 1e-9 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn records_roundtrip(o in observation()) {
        let back = from_json_line(&to_json_line(&o)).unwrap();
        prop_assert_eq!(&back, &o);
        let bin = decode_binary(&encode_binary(&o)).unwrap();
        prop_assert_eq!(bin.repeater, o.repeater);
        prop_assert_eq!(bin.sweep_index, o.sweep_index);
        prop_assert_eq!(bin.flags, o.flags);
        prop_assert_eq!(bin.delay_est, o.delay_est);
        // single-precision fields
        prop_assert!((bin.snr_db - o.snr_db).abs() <= 1e-5 * (1.0 + o.snr_db.abs()));
        let (x, y) = (bin.jones.to_reals(), o.jones.to_reals());
        prop_assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-6 * (1.0 + b.abs())));
    }

    #[test]
    fn probe_is_unit_modulus_and_alternates(m in 0u64..1_000_000) {
        let cfg = SweepConfig::desk();
        prop_assert_eq!(pol_multiplex(&cfg, m), pol(m));
        prop_assert_ne!(pol_multiplex(&cfg, m), pol_multiplex(&cfg, m + 1));
        let p = generate_sweep(&cfg, m).unwrap();
        prop_assert_eq!(p.samples.len(), cfg.samples_per_sweep());
        for z in p.samples.iter().step_by(997) {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}
