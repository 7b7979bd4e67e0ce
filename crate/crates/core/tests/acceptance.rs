//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own line; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::net::TcpListener;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ofdr::analysis::{delay_series, frequency_noise_psd_raw, psd_ratio_db, span_movement_report, MovementConfig, WelchConfig};
use ofdr::cablesim::{
    calibrate_noise_floor, measure_snr, synth_laser_phase, transatlantic_mini, CableModel, LaserModel,
    PerturbationEvent, SimOptions, Simulator,
};
use ofdr::cli::{cmd_e2e, Product};
use ofdr::dsp::{
    circular_xcorr, column_phase_series, differential_phase, phase_series, PhaseConvention, PhaseSeries, Receiver,
    ReceiverConfig, RepeaterObservation, SweepCapture,
};
use ofdr::scenario::Scenario;
use ofdr::stream::{
    decode_frame, encode_end, encode_frame, serve, spawn_fault_proxy, write_stream, Consumer, Faults, FrameReader,
    StreamEvent,
};
use ofdr::waveform::{generate_sweep, out_of_band_dbc, quantize_probe, Polarization, SweepConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("SNR anchor at 1 s averaging", snr_anchor),
        ("averaging law", averaging_law),
        ("differential-phase isolation", differential_isolation),
        ("integrated-noise growth", noise_growth),
        ("laser comparison", laser_comparison),
        ("delay tracking and movement flags", delay_tracking),
        ("matched-filter oracle equivalence", xcorr_oracle),
        ("probe invariants", probe_invariants),
        ("wire protocol", wire_protocol),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {n:2} PASS  {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:2} FAIL  {name}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn simulator(cable: CableModel, laser: Option<&LaserModel>, duration: f64, seed: u64) -> Simulator {
    Simulator::new(SweepConfig::desk(), cable, laser, duration, seed, SimOptions::default()).unwrap()
}

/// Simulates `sweeps` in batches and runs them through a receiver.
fn observe(sim: &Simulator, sweeps: &[u64], rx: ReceiverConfig) -> Vec<RepeaterObservation> {
    let mut r = Receiver::new(sim.config(), &sim.expected_delays(), rx).unwrap();
    let mut out = Vec::new();
    for chunk in sweeps.chunks(64) {
        out.extend(r.push_batch(sim.captures(chunk).unwrap()).unwrap());
    }
    out.extend(r.finish().unwrap());
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Least-squares fit of `c + d·t + a·cos ωt + b·sin ωt`; returns `√(a²+b²)`.
fn tone_amplitude(times: &[f64], values: &[f64], freq: f64) -> f64 {
    let w = std::f64::consts::TAU * freq;
    let basis = |t: f64| [1.0, t, (w * t).cos(), (w * t).sin()];
    let mut m = [[0.0; 5]; 4];
    for (&t, &y) in times.iter().zip(values) {
        let b = basis(t);
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += b[i] * b[j];
            }
            m[i][4] += b[i] * y;
        }
    }
    for c in 0..4 {
        let p = (c..4).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..4 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..5 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let a = m[2][4] / m[2][2];
    let b = m[3][4] / m[3][3];
    a.hypot(b)
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn snr_anchor() -> Outcome {
    let t = Instant::now();
    let cfg = SweepConfig::desk();
    let cable = transatlantic_mini(1);
    let cal = calibrate_noise_floor(&cable, &cfg, 30.0, 1.0, 11).map_err(|e| e.to_string())?;
    let w = (1.0 / (2.0 * cfg.sweep_period)).round() as usize;
    let sim = simulator(cable.with_uniform_ase(cal.density).unwrap(), None, 2.0 * w as f64 * 1e-3, 1);
    let sweeps: Vec<u64> = (0..2 * w as u64).collect();
    let obs = observe(
        &sim,
        &sweeps,
        ReceiverConfig {
            average: w,
            ..Default::default()
        },
    );
    // last X and last Y record: each a full window of `w` sweeps
    let last = 2 * w as u64 - 2;
    let per_rep: Vec<f64> = (1..=8)
        .map(|k| {
            let v: Vec<f64> = obs
                .iter()
                .filter(|o| o.repeater == k && o.sweep_index >= last)
                .map(|o| o.snr_db)
                .collect();
            mean(&v)
        })
        .collect();
    let secs = t.elapsed().as_secs_f64();
    let ok = per_rep.iter().all(|s| (s - 30.0).abs() <= 1.0) && secs <= 120.0;
    check(
        ok,
        format!(
            "density {:.3e}/Hz, W={w}, per-repeater SNR {:?} dB, {secs:.0} s",
            cal.density,
            per_rep.iter().map(|s| (s * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
    )
}

fn averaging_law() -> Outcome {
    let cfg = SweepConfig::desk();
    // single-sweep SNR near 12 dB keeps W = 64 below the sidelobe floor
    let cable = transatlantic_mini(1).with_uniform_ase(7e-11).unwrap();
    // linear-mean SNR over repeaters and independent windows
    let snr = |w: usize, windows: u64| -> f64 {
        let lin: Vec<f64> = (0..windows)
            .flat_map(|s| measure_snr(&cable, &cfg, w, 100 + s).unwrap())
            .map(|db| 10f64.powf(db / 10.0))
            .collect();
        10.0 * mean(&lin).log10()
    };
    let base = snr(1, 32);
    let mut detail = format!("SNR(1) {base:.2} dB");
    let mut ok = true;
    for (w, windows) in [(4, 8), (16, 4), (64, 2)] {
        let gain = snr(w, windows) - base;
        let expect = 10.0 * (w as f64).log10();
        ok &= (gain - expect).abs() <= 1.0;
        detail += &format!(", W={w}: +{gain:.2} dB (expect {expect:.2})");
    }
    check(ok, detail)
}

fn differential_isolation() -> Outcome {
    let cable = transatlantic_mini(3)
        .with_random_birefringence()
        .with_uniform_ase(1e-12)
        .unwrap()
        .with_events(vec![PerturbationEvent::sinusoid(5, 2.0, 1.0)])
        .unwrap();
    let sim = simulator(cable, None, 1.0, 5);
    let sweeps: Vec<u64> = (0..1000).collect();
    let obs = observe(&sim, &sweeps, ReceiverConfig::default());
    let phases: Vec<PhaseSeries> = (1..=8)
        .map(|k| phase_series(&obs, k, PhaseConvention::LargestElement, 1e-3))
        .collect();
    let diffs = differential_phase(&phases);
    let amp = |s: &PhaseSeries| tone_amplitude(&s.times, &s.values, 1.0);
    let d: Vec<f64> = diffs.iter().map(amp).collect();
    let p: Vec<f64> = phases.iter().map(amp).collect();
    let a5 = d[4];
    let mut ok = (a5 - 4.0).abs() <= 0.4 && phases.iter().all(|s| s.len() >= 450);
    let worst = (0..8)
        .filter(|&i| i != 4)
        .map(|i| 20.0 * (d[i] / a5).log10())
        .fold(f64::NEG_INFINITY, f64::max);
    ok &= worst <= -20.0;
    ok &= p[4..].iter().all(|a| (a - 4.0).abs() <= 0.4);
    check(
        ok,
        format!(
            "|Δφ_5| {a5:.3} rad, worst other span {worst:.1} dB, |φ_k| k=1..8 {:?}",
            p.iter().map(|a| (a * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn noise_growth() -> Outcome {
    let seeds = 20u64;
    let sweeps: Vec<u64> = (0..128).collect();
    let laser = LaserModel::free_running();
    let vars: Vec<Vec<f64>> = (0..seeds)
        .map(|s| {
            let cable = transatlantic_mini(s).with_uniform_ase(1e-12).unwrap();
            let sim = simulator(cable, Some(&laser), 0.13, 1000 + s);
            let obs = observe(&sim, &sweeps, ReceiverConfig::default());
            (1..=8)
                .map(|k| variance(&phase_series(&obs, k, PhaseConvention::LargestElement, 1e-3).values))
                .collect()
        })
        .collect();
    // one-sided 95% bootstrap lower bound of the mean step Var(φ_{k+1}) − Var(φ_k)
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let resamples = 2000;
    let mut bounds = Vec::new();
    for k in 0..7 {
        let steps: Vec<f64> = vars.iter().map(|v| v[k + 1] - v[k]).collect();
        let mut means: Vec<f64> = (0..resamples)
            .map(|_| mean(&(0..steps.len()).map(|_| steps[rng.random_range(0..steps.len())]).collect::<Vec<_>>()))
            .collect();
        means.sort_by(f64::total_cmp);
        bounds.push(means[resamples / 20]);
    }
    let mean_var: Vec<f64> = (0..8).map(|k| mean(&vars.iter().map(|v| v[k]).collect::<Vec<_>>())).collect();
    check(
        bounds.iter().all(|&b| b >= 0.0),
        format!(
            "{seeds} seeds, mean Var(φ_k) {:?} rad², step lower bounds {:?}",
            mean_var.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            bounds.iter().map(|v| (v * 1e5).round() / 1e5).collect::<Vec<_>>()
        ),
    )
}

fn laser_comparison() -> Outcome {
    let free = LaserModel::free_running();
    let stab = LaserModel::cavity_stabilized();
    let welch = WelchConfig::default();
    let bands = [(0.1, 0.9), (10.0, 1e3)];

    // long synthetic tracks through a delayed self-heterodyne difference
    let fs = 4000.0;
    let n = 1 << 18;
    let tau = transatlantic_mini(1).roundtrip_delay(8, 0.0).unwrap();
    let lag = (tau * fs).round() as usize;
    let delayed = |m: &LaserModel| {
        let p = synth_laser_phase(m, n, fs, 21).unwrap();
        let d: Vec<f64> = (lag..n).map(|i| p[i] - p[i - lag]).collect();
        frequency_noise_psd_raw(&d, fs, &[], &welch).unwrap()
    };
    let synth = psd_ratio_db(&delayed(&stab), &delayed(&free), &bands);

    // short simulated runs through the receiver, repeater 8, 1 kHz column series
    let sweeps: Vec<u64> = (0..512).collect();
    let chain = |m: &LaserModel| {
        let cable = transatlantic_mini(1).with_uniform_ase(1e-14).unwrap();
        let sim = simulator(cable, Some(m), 0.52, 33);
        let obs = observe(&sim, &sweeps, ReceiverConfig::default());
        let s = column_phase_series(&obs, 8, 1e-3);
        frequency_noise_psd_raw(&s.values, s.sample_rate, &s.resets, &welch).unwrap()
    };
    let sim = psd_ratio_db(&chain(&stab), &chain(&free), &[(10.0, 500.0)]);

    let within = |v: Option<f64>, target: f64| v.is_some_and(|x| (x - target).abs() <= 2.0);
    let ok = within(synth[0], -10.0) && within(synth[1], -20.0) && within(sim[0], -20.0);
    let f = |v: Option<f64>| v.map_or("none".into(), |x| format!("{x:.2}"));
    check(
        ok,
        format!(
            "2^18 samples at 4 kHz, τ {:.2} ms: {} dB (<1 Hz), {} dB (10 Hz–1 kHz); receiver chain 10–500 Hz: {} dB",
            lag as f64 / fs * 1e3,
            f(synth[0]),
            f(synth[1]),
            f(sim[0])
        ),
    )
}

fn delay_tracking() -> Outcome {
    let points = 101u64;
    let spacing = 1000u64; // 100 s span at 1 ms sweeps
    let sweeps: Vec<u64> = (0..points).flat_map(|i| [i * spacing, i * spacing + 1]).collect();
    let duration = (points * spacing) as f64 * 1e-3;
    let run = |events: Vec<PerturbationEvent>| {
        let cable = transatlantic_mini(2)
            .with_uniform_ase(1e-13)
            .unwrap()
            .with_events(events)
            .unwrap();
        let sim = simulator(cable, None, duration, 9);
        observe(&sim, &sweeps, ReceiverConfig::default())
    };

    let obs = run(vec![PerturbationEvent::delay_drift(3, 5.0, 0.0, 100.0)]);
    let changes: Vec<f64> = (1..=8)
        .map(|k| {
            let s = delay_series(&obs, k);
            slope(&s.times, &s.relative_ns()) * 100.0
        })
        .collect();
    let mut ok = changes[2..].iter().all(|c| (c - 10.0).abs() <= 0.5) && changes[..2].iter().all(|c| c.abs() <= 0.5);

    let obs = run(vec![
        PerturbationEvent::delay_drift(3, 5.0, 0.0, 100.0),
        PerturbationEvent::delay_drift(4, -5.0, 0.0, 100.0),
    ]);
    let series: Vec<_> = (1..=8).map(|k| delay_series(&obs, k)).collect();
    let report = span_movement_report(&series, &MovementConfig::default()).map_err(|e| e.to_string())?;
    let flags: Vec<_> = report.flagged.iter().map(|f| (f.spans, f.correlation)).collect();
    ok &= flags.len() == 1 && flags[0].0 == (3, 4) && flags[0].1 < -0.8;
    check(
        ok,
        format!(
            "round-trip change per repeater {:?} ns; flagged {:?}",
            changes.iter().map(|c| (c * 100.0).round() / 100.0).collect::<Vec<_>>(),
            flags
        ),
    )
}

fn xcorr_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4096);
        let mut draw = || -> Vec<Complex64> {
            (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        let (a, b) = (draw(), draw());
        let fast = circular_xcorr(&a, &b).map_err(|e| e.to_string())?;
        let direct: Vec<Complex64> = (0..n)
            .map(|l| (0..n).map(|t| a[(t + l) % n] * b[t].conj()).sum())
            .collect();
        let scale = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = fast.iter().zip(&direct).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        worst = worst.max(err / scale);
    }
    check(worst <= 1e-6, format!("100 inputs, worst relative error {worst:.2e}"))
}

fn probe_invariants() -> Outcome {
    let cfg = SweepConfig::desk();
    let mut worst_modulus = 0.0f64;
    let mut worst_ripple = 0.0f64;
    let mut worst_oob = f64::NEG_INFINITY;
    for m in [0u64, 1, 2, 1001] {
        let p = generate_sweep(&cfg, m).map_err(|e| e.to_string())?;
        worst_modulus = p.samples.iter().map(|z| (z.norm() - 1.0).abs()).fold(worst_modulus, f64::max);
        let q = quantize_probe(&p, cfg.dac_bits).map_err(|e| e.to_string())?;
        worst_ripple = worst_ripple.max(q.envelope_ripple_db());
        worst_oob = worst_oob
            .max(out_of_band_dbc(&p.samples, &cfg).map_err(|e| e.to_string())?)
            .max(out_of_band_dbc(&q.to_complex(), &cfg).map_err(|e| e.to_string())?);
    }
    check(
        worst_modulus <= 1e-12 && worst_ripple < 0.1 && worst_oob < -60.0,
        format!("|s|−1 ≤ {worst_modulus:.1e}, 14-bit ripple {worst_ripple:.4} dB, out-of-band {worst_oob:.1} dBc"),
    )
}

fn random_capture(rng: &mut ChaCha8Rng, m: u64) -> SweepCapture {
    let bits = rng.random_range(2..=16u32);
    let n = rng.random_range(0..64);
    let half = 1i32 << (bits - 1);
    let mut ch = || (0..n).map(|_| rng.random_range(-half..half) as i16).collect::<Vec<_>>();
    let (x, y) = (ch(), ch());
    SweepCapture {
        sweep_index: m,
        launch_pol: if m % 2 == 0 { Polarization::X } else { Polarization::Y },
        timestamp_ns: rng.random(),
        adc_bits: bits,
        channels: [x, y],
    }
}

const GOLDEN_FRAME: &str = "4f46445201010700000000000000c0c62d00000000000300000000000000020000009001fc7fe0fc00800861eb2d";
const GOLDEN_END: &str = "4f46445201020500000000000000000000000000000000000000000000000000000062cfefb5";

fn wire_protocol() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // golden bytes built independently from the documented layout
    let golden = SweepCapture {
        sweep_index: 3,
        launch_pol: Polarization::Y,
        timestamp_ns: 3_000_000,
        adc_bits: 14,
        channels: [vec![100, -200], vec![8191, -8192]],
    };
    let golden_ok = hex::encode(encode_frame(&golden, 7).unwrap()) == GOLDEN_FRAME
        && hex::encode(encode_end(5)) == GOLDEN_END
        && decode_frame(&hex::decode(GOLDEN_FRAME).unwrap()).unwrap().0.to_capture(14).unwrap() == golden;
    ok &= golden_ok;
    notes.push(format!("golden {}", if golden_ok { "match" } else { "MISMATCH" }));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for i in 0..10_000u64 {
        let c = random_capture(&mut rng, i);
        let bytes = encode_frame(&c, i).unwrap();
        let (f, used) = decode_frame(&bytes).unwrap();
        if used != bytes.len() || f.sequence != i || f.to_capture(c.adc_bits).unwrap() != c {
            bad += 1;
        }
    }
    ok &= bad == 0;
    notes.push(format!("10^4 round-trips, {bad} mismatches"));

    // drop three frames through the fault proxy
    let caps: Vec<SweepCapture> = (0..1000).map(|m| random_capture(&mut rng, m)).collect();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let upstream = listener.local_addr().unwrap();
    let src = caps.clone();
    let server = std::thread::spawn(move || serve(&listener, src.into_iter().map(Ok)));
    let faults = Faults {
        drop: [17, 500, 501].into_iter().collect(),
        ..Default::default()
    };
    let (proxy, proxy_handle) = spawn_fault_proxy(upstream, faults).unwrap();
    let sock = std::net::TcpStream::connect(proxy).unwrap();
    let mut consumer = Consumer::from_reader(sock, 14, 64);
    let mut received = Vec::new();
    for ev in consumer.by_ref() {
        if let StreamEvent::Capture { sequence, .. } = ev.unwrap() {
            received.push(sequence);
        }
    }
    let report = consumer.finish();
    server.join().unwrap().unwrap();
    proxy_handle.join().unwrap().unwrap();
    let drop_ok = report.gaps == vec![17, 500, 501]
        && report.captures == 997
        && report.rejects.is_empty()
        && report.complete
        && report.conserved()
        && received.len() == 997;
    ok &= drop_ok;
    notes.push(format!("drop gaps {:?}, {} captures, conserved {}", report.gaps, report.captures, report.conserved()));

    // 60 s of desk-rate sweeps over loopback TCP
    let cfg = SweepConfig::desk();
    let sim = simulator(transatlantic_mini(1).with_uniform_ase(1e-12).unwrap(), None, 0.01, 1);
    let pool = sim.capture_range(0, 8).unwrap();
    let frames = 60_000u64;
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let t = Instant::now();
    let server = std::thread::spawn(move || {
        let src = (0..frames).map(move |m| {
            let mut c = pool[(m % 8) as usize].clone();
            c.sweep_index = m;
            c.launch_pol = if m % 2 == 0 { Polarization::X } else { Polarization::Y };
            c.timestamp_ns = m * 1_000_000;
            Ok(c)
        });
        serve(&listener, src)
    });
    let sock = std::net::TcpStream::connect(addr).unwrap();
    let mut consumer = Consumer::from_reader(sock, cfg.adc_bits, 64);
    let mut count = 0u64;
    for ev in consumer.by_ref() {
        if let StreamEvent::Capture { capture, .. } = ev.unwrap() {
            count += (capture.len() == cfg.samples_per_sweep()) as u64;
        }
    }
    let report = consumer.finish();
    server.join().unwrap().unwrap();
    let elapsed = t.elapsed();
    let stream_time = Duration::from_secs_f64(frames as f64 * cfg.sweep_period);
    let rtf = stream_time.as_secs_f64() / elapsed.as_secs_f64();
    let loop_ok = count == frames && report.gaps.is_empty() && report.conserved() && rtf >= 1.0;
    ok &= loop_ok;
    notes.push(format!(
        "loopback {count} frames ({:.0} s of sweeps) in {:.1} s, real-time factor {rtf:.2}",
        stream_time.as_secs_f64(),
        elapsed.as_secs_f64()
    ));

    // a reader that starts mid-frame resynchronizes on the next header
    let mut bytes = Vec::new();
    write_stream(&mut bytes, (0..4).map(|m| Ok(random_capture(&mut rng, m)))).unwrap();
    let mut r = FrameReader::new(&bytes[5..], 14);
    while r.next_event().unwrap().is_some() {}
    ok &= r.report().captures == 3 && r.report().gaps == vec![0];

    check(ok, notes.join("; "))
}

fn e2e_once(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    let sc = Scenario::preset("transatlantic-mini")
        .unwrap()
        .with_overrides(&["run.sweeps=96".into()])
        .unwrap();
    cmd_e2e(&sc, dir, &Product::ALL).unwrap();
    (
        std::fs::read(dir.join("observations.jsonl")).unwrap(),
        std::fs::read(dir.join("manifest.json")).unwrap(),
    )
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (obs_a, man_a) = e2e_once(a.path());
    let (obs_b, man_b) = e2e_once(b.path());
    check(
        !obs_a.is_empty() && obs_a == obs_b && man_a == man_b,
        format!(
            "observations {} bytes identical: {}, manifest {} bytes identical: {}",
            obs_a.len(),
            obs_a == obs_b,
            man_a.len(),
            man_a == man_b
        ),
    )
}
