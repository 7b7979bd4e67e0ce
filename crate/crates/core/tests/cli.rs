use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use ofdr::cli::{cmd_e2e, cmd_process, cmd_simulate, cmd_stream_rx, cmd_stream_tx, Product, RunManifest};
use ofdr::scenario::Scenario;

fn ofdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ofdr")).args(args).output().unwrap()
}

fn error_field(out: &Output) -> serde_json::Value {
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    err["error"].clone()
}

fn mini(sweeps: u64) -> Scenario {
    Scenario::preset("transatlantic-mini")
        .unwrap()
        .with_overrides(&[format!("run.sweeps={sweeps}")])
        .unwrap()
}

#[test]
fn config_prints_resolved_scenario() {
    let out = ofdr(&["config", "--preset", "transatlantic-mini", "--set", "run.sweeps=7", "--seed", "42"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let sc = Scenario::from_toml_str(&text, None, &[]).unwrap();
    assert_eq!(sc.run.sweeps, 7);
    assert_eq!(sc.run.seed, 42);
    assert_eq!(sc.name, "transatlantic-mini");
}

#[test]
fn non_integer_samples_per_sweep_exits_2() {
    let out = ofdr(&["config", "--preset", "transatlantic-mini", "--set", "sweep.sweep_period=1.0000001e-3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_field(&out);
    assert_eq!(err["kind"], "config");
    assert!(err["field"].as_str().unwrap().contains("sweep_period"), "{err}");
}

#[test]
fn unknown_key_names_its_path() {
    let out = ofdr(&["config", "--preset", "transatlantic-mini", "--set", "run.sweepz=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_field(&out)["field"], "run.sweepz");
}

#[test]
fn unknown_preset_and_bad_flag_exit_2() {
    assert_eq!(ofdr(&["config", "--preset", "pacific"]).status.code(), Some(2));
    assert_eq!(ofdr(&["simulate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn process_of_empty_input_warns_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.caps");
    let obs = dir.path().join("obs.jsonl");
    fs::write(&empty, b"").unwrap();
    let out = ofdr(&["process", "--in", empty.to_str().unwrap(), "--out", obs.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(fs::read(&obs).unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn truncated_capture_file_keeps_complete_frames() {
    let mut caps = Vec::new();
    cmd_simulate(&mini(4), &mut caps).unwrap();
    caps.truncate(caps.len() / 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.caps");
    fs::write(&path, &caps).unwrap();
    let out = ofdr(&["process", "--in", path.to_str().unwrap(), "--out", "-"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("complete = false"));
    let records = String::from_utf8(out.stdout).unwrap();
    // the file header pushes the cut into the second frame: one survives
    assert_eq!(records.lines().count(), 8);
}

fn files_under(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn chained_commands_match_e2e() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let common = ["--preset", "transatlantic-mini", "--set", "run.sweeps=160"];
    let run = |args: Vec<&str>| {
        let out = ofdr(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out
    };
    let caps = d("run.caps");
    let obs = d("obs.jsonl");
    let analysis = d("analysis");
    let e2e = d("e2e");
    run([&["simulate", "--out", caps.as_str()][..], &common].concat());
    run(vec!["process", "--in", &caps, "--out", &obs]);
    run([&["analyze", "--in", obs.as_str(), "--out", analysis.as_str()][..], &common].concat());
    run([&["e2e", "--out", e2e.as_str()][..], &common].concat());

    assert_eq!(fs::read(&obs).unwrap(), fs::read(dir.path().join("e2e/observations.jsonl")).unwrap());
    let chained = files_under(Path::new(&analysis));
    assert!(chained.iter().any(|(n, _)| n == "summary.json"));
    assert_eq!(chained, files_under(&dir.path().join("e2e/analysis")));

    let manifest: RunManifest =
        serde_json::from_slice(&fs::read(dir.path().join("e2e/manifest.json")).unwrap()).unwrap();
    assert!(manifest.error.is_none());
    assert_eq!(manifest.records, fs::read_to_string(&obs).unwrap().lines().count());
    for f in &manifest.outputs {
        assert_eq!(fs::metadata(dir.path().join("e2e").join(&f.path)).unwrap().len(), f.bytes);
    }
}

#[test]
fn binary_records_roundtrip_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sc = mini(64).with_overrides(&["output.format=\"binary\"".into()]).unwrap();
    let m = cmd_e2e(&sc, dir.path(), &[Product::Phase, Product::Summary]).unwrap();
    assert!(dir.path().join("observations.bin").exists());
    assert!(m.outputs.iter().any(|o| o.path.ends_with("summary.json")));
}

#[test]
fn stream_matches_file_processing() {
    let sc = mini(48);
    let mut caps = Vec::new();
    cmd_simulate(&sc, &mut caps).unwrap();
    let mut from_file = Vec::new();
    let report = cmd_process(&caps[..], &mut from_file, None, &[]).unwrap();
    assert!(report.stream.complete && report.stream.conserved());

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = listener.local_addr().unwrap().to_string();
    let tx_sc = sc.clone();
    let tx = std::thread::spawn(move || cmd_stream_tx(&tx_sc, &listener).unwrap());
    let mut from_stream = Vec::new();
    let rx = cmd_stream_rx(&sc, &endpoint, &mut from_stream, 8).unwrap();
    assert_eq!(tx.join().unwrap().frames, 48);
    assert_eq!(rx.stream.captures, 48);
    assert!(rx.stream.gaps.is_empty());
    assert_eq!(from_stream, from_file);
}

#[test]
fn stream_commands_over_tcp() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("127.0.0.1:{port}");
    let common = ["--preset", "transatlantic-mini", "--set", "run.sweeps=12"];
    let mut tx = Command::new(env!("CARGO_BIN_EXE_ofdr"))
        .args([&["stream-tx", "--endpoint", endpoint.as_str()][..], &common].concat())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let mut ok = false;
    for _ in 0..50 {
        let out = ofdr(
            &[
                &["stream-rx", "--endpoint", endpoint.as_str(), "--report", report.to_str().unwrap()][..],
                &common,
            ]
            .concat(),
        );
        if out.status.success() {
            assert!(!out.stdout.is_empty());
            ok = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(100));
    }
    assert!(tx.wait().unwrap().success());
    assert!(ok);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["stream"]["captures"], 12);
    assert_eq!(r["stream"]["complete"], true);
}
