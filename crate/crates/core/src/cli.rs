//! Command-line driver: simulate, process, analyze, e2e and the streaming
//! pair, all configured by one scenario.
//!
//! Capture files are `"OFDRCAPS"`, a u32 LE header length, a JSON header
//! holding the resolved scenario and the nominal delays, then the frame
//! stream exactly as sent over a socket (ending with the end marker).
//!
//! Errors go to stderr as one JSON object; exit code 2 means the
//! configuration was rejected, 1 any other failure.

use std::collections::VecDeque;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    band_power, delay_series, export, frequency_noise_psd, span_movement_report, spectrogram,
};
use crate::cablesim::{NoiseCalibration, Simulator};
use crate::dsp::records::{read_binary, read_jsonl, write_binary, write_jsonl};
use crate::dsp::{differential_phase, phase_series, Receiver, RepeaterObservation, SweepCapture};
use crate::error::{Error, Result};
use crate::scenario::{RecordFormat, Scenario};
use crate::stream::{consume, resolve_endpoint, serve, write_stream, FrameReader, GapReport, StreamEvent};

pub const CAPTURE_MAGIC: [u8; 8] = *b"OFDRCAPS";
pub const CAPTURE_FORMAT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "ofdr", version, about = "Repeater-resolved phase and polarization monitoring of submarine cables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base preset (transatlantic-mini, transatlantic-full).
    #[arg(long)]
    pub preset: Option<String>,
    /// Shorthand for `--set run.seed=N`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted override, e.g. `--set receiver.average=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut o = self.set.clone();
        if let Some(s) = self.seed {
            o.push(format!("run.seed={s}"));
        }
        Scenario::load(self.config.as_deref(), self.preset.as_deref(), &o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Product {
    /// Integrated phase per repeater.
    Phase,
    /// Differential phase per span.
    Differential,
    /// Phase and frequency noise PSD per repeater.
    Psd,
    /// Spectrogram of each span's differential phase.
    Spectrogram,
    /// Delay series per repeater.
    Delay,
    /// Span movement and correlation report.
    Movement,
    /// Per-repeater summary and product index.
    Summary,
}

impl Product {
    pub const ALL: [Product; 7] = [
        Product::Phase,
        Product::Differential,
        Product::Psd,
        Product::Spectrogram,
        Product::Delay,
        Product::Movement,
        Product::Summary,
    ];
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate raw captures into a capture file.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output path, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Turn a capture file into observation records.
    Process {
        /// Capture file, `-` for stdin.
        #[arg(long = "in", default_value = "-")]
        input: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Record format; defaults to the scenario's.
        #[arg(long, value_enum)]
        format: Option<RecordFormat>,
        /// Overrides applied to the scenario stored in the capture file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Where to write the frame accounting as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute analysis products from observation records.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',')]
        products: Vec<Product>,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Simulate, process and analyze in one pipeline.
    E2e {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',')]
        products: Vec<Product>,
    },
    /// Serve simulated captures to one TCP consumer.
    StreamTx {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        endpoint: String,
    },
    /// Consume a capture stream and write observation records.
    StreamRx {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        endpoint: String,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Decoded frames buffered ahead of processing.
        #[arg(long, default_value_t = 64)]
        queue: usize,
    },
    /// Print the resolved scenario as TOML.
    Config {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    field: Option<&'a str>,
    message: String,
}

fn error_json(e: &Error) -> String {
    let field = match e {
        Error::Config { field, .. } => Some(field.as_str()),
        _ => None,
    };
    serde_json::json!({
        "error": ErrorReport {
            kind: e.kind(),
            field,
            message: e.to_string(),
        }
    })
    .to_string()
}

fn warn(message: &str) {
    eprintln!("{}", serde_json::json!({ "warning": message }));
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            match e {
                Error::Config { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, out } => {
            let mut sc = scenario.resolve()?;
            init_threads(sc.run.threads);
            sc.resolve_noise()?;
            let w = open_out(&out)?;
            cmd_simulate(&sc, w)?;
        }
        Command::Process {
            input,
            out,
            format,
            set,
            report,
        } => {
            let r = open_in(&input)?;
            let w = open_out(&out)?;
            let rep = cmd_process(r, w, format, &set)?;
            if let Some(p) = report {
                export::write_json(&p, &rep)?;
            }
        }
        Command::Analyze {
            input,
            out,
            products,
            scenario,
        } => {
            let sc = scenario.resolve()?;
            init_threads(sc.run.threads);
            let obs = read_observations(&input)?;
            cmd_analyze(&obs, &sc, &out, &products)?;
        }
        Command::E2e {
            scenario,
            out,
            products,
        } => {
            let sc = scenario.resolve()?;
            init_threads(sc.run.threads);
            cmd_e2e(&sc, &out, &products)?;
        }
        Command::StreamTx { scenario, endpoint } => {
            let mut sc = scenario.resolve()?;
            init_threads(sc.run.threads);
            sc.resolve_noise()?;
            let listener = TcpListener::bind(resolve_endpoint(&endpoint))?;
            eprintln!("{}", serde_json::json!({ "listening": listener.local_addr()?.to_string() }));
            let stats = cmd_stream_tx(&sc, &listener)?;
            eprintln!("{}", serde_json::json!({ "sent": stats }));
        }
        Command::StreamRx {
            scenario,
            endpoint,
            out,
            report,
            queue,
        } => {
            let mut sc = scenario.resolve()?;
            init_threads(sc.run.threads);
            sc.resolve_noise()?;
            let w = open_out(&out)?;
            let rep = cmd_stream_rx(&sc, &endpoint, w, queue)?;
            match report {
                Some(p) => export::write_json(&p, &rep)?,
                None => eprintln!("{}", serde_json::json!({ "stream": rep })),
            }
        }
        Command::Config { scenario } => {
            let sc = scenario.resolve()?;
            print!("{}", sc.to_toml_string());
        }
    }
    Ok(())
}

fn open_out(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn open_in(path: &Path) -> Result<Box<dyn Read + Send>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        Ok(Box::new(File::open(path)?))
    }
}

/// Captures of a run, simulated `batch` at a time in parallel.
pub struct BatchedCaptures<'a> {
    sim: &'a Simulator,
    next: u64,
    end: u64,
    batch: usize,
    buf: VecDeque<SweepCapture>,
}

impl<'a> BatchedCaptures<'a> {
    pub fn new(sim: &'a Simulator, sweeps: std::ops::Range<u64>, batch: usize) -> Self {
        BatchedCaptures {
            sim,
            next: sweeps.start,
            end: sweeps.end,
            batch: batch.max(1),
            buf: VecDeque::new(),
        }
    }
}

impl Iterator for BatchedCaptures<'_> {
    type Item = Result<SweepCapture>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.buf.is_empty() && self.next < self.end {
            let stop = (self.next + self.batch as u64).min(self.end);
            let idx: Vec<u64> = (self.next..stop).collect();
            self.next = stop;
            match self.sim.captures(&idx) {
                Ok(c) => self.buf.extend(c),
                Err(e) => {
                    self.next = self.end;
                    return Some(Err(e));
                }
            }
        }
        self.buf.pop_front().map(Ok)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaptureHeader {
    pub format_version: u32,
    pub scenario: Scenario,
    /// Nominal round-trip delays at t = 0, s.
    pub expected_delays: Vec<f64>,
}

pub fn write_capture_header<W: Write>(mut w: W, h: &CaptureHeader) -> Result<()> {
    let json = serde_json::to_vec(h)?;
    w.write_all(&CAPTURE_MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

/// Reads the header; `Ok(None)` for an empty input.
pub fn read_capture_header<R: Read>(r: &mut R) -> Result<Option<CaptureHeader>> {
    let mut magic = [0u8; 8];
    let mut got = 0;
    while got < magic.len() {
        let n = r.read(&mut magic[got..])?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < magic.len() || magic != CAPTURE_MAGIC {
        return Err(Error::Malformed("not a capture file (bad magic)".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let h: CaptureHeader = serde_json::from_slice(&json)?;
    if h.format_version != CAPTURE_FORMAT_VERSION {
        return Err(Error::Malformed(format!("capture format version {}", h.format_version)));
    }
    Ok(Some(h))
}

pub fn cmd_simulate<W: Write>(sc: &Scenario, mut w: W) -> Result<()> {
    let sim = sc.simulator()?;
    let header = CaptureHeader {
        format_version: CAPTURE_FORMAT_VERSION,
        scenario: sc.clone(),
        expected_delays: sim.expected_delays(),
    };
    write_capture_header(&mut w, &header)?;
    write_stream(&mut w, BatchedCaptures::new(&sim, sc.sweep_indices(), sc.run.batch))?;
    w.flush()?;
    Ok(())
}

/// Feeds captures through a receiver in batches, writing records as they
/// complete.
struct RecordSink<W: Write> {
    receiver: Receiver,
    batch: Vec<SweepCapture>,
    batch_len: usize,
    format: RecordFormat,
    out: W,
    count: usize,
}

impl<W: Write> RecordSink<W> {
    fn new(sc: &Scenario, delays: &[f64], format: RecordFormat, out: W) -> Result<Self> {
        Ok(RecordSink {
            receiver: Receiver::new(&sc.sweep, delays, sc.receiver.clone())?,
            batch: Vec::with_capacity(sc.run.batch),
            batch_len: sc.run.batch,
            format,
            out,
            count: 0,
        })
    }

    fn emit(&mut self, recs: Vec<RepeaterObservation>) -> Result<()> {
        self.count += recs.len();
        match self.format {
            RecordFormat::Jsonl => write_jsonl(&mut self.out, &recs),
            RecordFormat::Binary => write_binary(&mut self.out, &recs),
        }
    }

    fn push(&mut self, c: SweepCapture) -> Result<()> {
        self.batch.push(c);
        if self.batch.len() >= self.batch_len {
            self.flush_batch()?;
        }
        Ok(())
    }

    fn flush_batch(&mut self) -> Result<()> {
        let b = std::mem::take(&mut self.batch);
        let recs = self.receiver.push_batch(b)?;
        self.emit(recs)
    }

    fn finish(mut self) -> Result<usize> {
        self.flush_batch()?;
        let recs = self.receiver.finish()?;
        self.emit(recs)?;
        self.out.flush()?;
        Ok(self.count)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProcessReport {
    pub records: usize,
    pub stream: GapReport,
}

pub fn cmd_process<R: Read, W: Write>(
    mut input: R,
    out: W,
    format: Option<RecordFormat>,
    overrides: &[String],
) -> Result<ProcessReport> {
    let Some(header) = read_capture_header(&mut input)? else {
        warn("empty input; no records written");
        return Ok(ProcessReport::default());
    };
    let sc = if overrides.is_empty() {
        header.scenario
    } else {
        header.scenario.with_overrides(overrides)?
    };
    init_threads(sc.run.threads);
    let format = format.unwrap_or(sc.output.format);
    let mut sink = RecordSink::new(&sc, &header.expected_delays, format, out)?;
    let mut reader = FrameReader::new(input, sc.sweep.adc_bits);
    while let Some(ev) = reader.next_event()? {
        if let StreamEvent::Capture { capture, .. } = ev {
            sink.push(capture)?;
        }
    }
    let records = sink.finish()?;
    let stream = reader.into_report();
    if !stream.gaps.is_empty() || !stream.rejects.is_empty() || !stream.complete {
        warn(&format!(
            "stream had {} gaps, {} rejects, complete = {}",
            stream.gaps.len(),
            stream.rejects.len(),
            stream.complete
        ));
    }
    Ok(ProcessReport { records, stream })
}

/// Reads JSON-lines or binary records, telling them apart by the first byte.
pub fn read_observations(path: &Path) -> Result<Vec<RepeaterObservation>> {
    let mut r = BufReader::new(open_in(path)?);
    let first = r.fill_buf()?.first().copied();
    match first {
        None => Ok(Vec::new()),
        Some(b'{') => read_jsonl(r),
        Some(_) => read_binary(r),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub product: Product,
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RepeaterSummary {
    pub repeater: usize,
    pub records: usize,
    pub missing: usize,
    pub mean_snr_db: f64,
    pub mean_intensity_db: f64,
    pub mean_delay_s: f64,
    pub phase_samples: usize,
    pub phase_std_rad: f64,
    pub differential_std_rad: f64,
    /// Share of the span's differential-phase power in `analysis.band`, dB.
    pub band_power_db: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisIndex {
    pub files: Vec<String>,
    pub skipped: Vec<Skipped>,
    pub repeaters: Vec<RepeaterSummary>,
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn finite_mean<'a>(v: impl Iterator<Item = &'a f64>) -> f64 {
    let (s, n) = v.filter(|x| x.is_finite()).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Writes the selected products into `dir` (all when `products` is empty).
pub fn cmd_analyze(
    obs: &[RepeaterObservation],
    sc: &Scenario,
    dir: &Path,
    products: &[Product],
) -> Result<AnalysisIndex> {
    fs::create_dir_all(dir)?;
    let want = |p: Product| products.is_empty() || products.contains(&p);
    let a = &sc.analysis;
    let t = sc.sweep.sweep_period;
    let mut ks: Vec<usize> = obs.iter().map(|o| o.repeater).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut idx = AnalysisIndex::default();
    let skip = |idx: &mut AnalysisIndex, product, index, e: Error| {
        idx.skipped.push(Skipped {
            product,
            index,
            reason: e.to_string(),
        })
    };
    let phases: Vec<_> = ks.iter().map(|&k| phase_series(obs, k, a.convention, t)).collect();
    let diffs = differential_phase(&phases);
    let delays: Vec<_> = ks.iter().map(|&k| delay_series(obs, k)).collect();

    for (i, &k) in ks.iter().enumerate() {
        if want(Product::Phase) {
            let name = format!("phase_k{k}.csv");
            export::write_csv_file(&dir.join(&name), |w| export::write_phase_csv(w, &phases[i]))?;
            idx.files.push(name);
        }
        if want(Product::Differential) {
            let name = format!("dphase_span{k}.csv");
            export::write_csv_file(&dir.join(&name), |w| export::write_phase_csv(w, &diffs[i]))?;
            idx.files.push(name);
        }
        if want(Product::Psd) {
            match frequency_noise_psd(&phases[i], &a.welch) {
                Ok(r) => {
                    let name = format!("psd_k{k}.csv");
                    export::write_csv_file(&dir.join(&name), |w| export::write_psd_csv(w, &r))?;
                    idx.files.push(name);
                }
                Err(e) => skip(&mut idx, Product::Psd, k, e),
            }
        }
        if want(Product::Spectrogram) {
            match spectrogram(&diffs[i], &a.spectrogram) {
                Ok(g) => {
                    let stem = format!("spectrogram_span{k}");
                    export::write_spectrogram(dir, &stem, &g)?;
                    idx.files.push(format!("{stem}.csv"));
                    idx.files.push(format!("{stem}.json"));
                }
                Err(e) => skip(&mut idx, Product::Spectrogram, k, e),
            }
        }
        if want(Product::Delay) {
            let name = format!("delay_k{k}.csv");
            export::write_csv_file(&dir.join(&name), |w| export::write_delay_csv(w, &delays[i]))?;
            idx.files.push(name);
        }
    }
    if want(Product::Movement) && !delays.is_empty() {
        match span_movement_report(&delays, &a.movement) {
            Ok(r) => {
                export::write_csv_file(&dir.join("movement.csv"), |w| export::write_movement_csv(w, &r))?;
                export::write_json(&dir.join("movement.json"), &r)?;
                idx.files.push("movement.csv".into());
                idx.files.push("movement.json".into());
            }
            Err(e) => skip(&mut idx, Product::Movement, 0, e),
        }
    }
    if want(Product::Summary) {
        for (i, &k) in ks.iter().enumerate() {
            let recs: Vec<&RepeaterObservation> = obs.iter().filter(|o| o.repeater == k).collect();
            let found: Vec<&&RepeaterObservation> = recs
                .iter()
                .filter(|o| !o.flags.contains(crate::dsp::ObservationFlags::MISSING))
                .collect();
            let (lo, hi) = a.band;
            let bp = {
                let d = &diffs[i];
                let nyq = d.sample_rate / 2.0;
                band_power(&d.values, d.sample_rate, lo.min(nyq), hi.min(nyq), &a.welch)
                    .ok()
                    .map(|b| b.db)
            };
            idx.repeaters.push(RepeaterSummary {
                repeater: k,
                records: recs.len(),
                missing: recs.len() - found.len(),
                mean_snr_db: finite_mean(found.iter().map(|o| &o.snr_db)),
                mean_intensity_db: finite_mean(found.iter().map(|o| &o.intensity_db)),
                mean_delay_s: finite_mean(found.iter().map(|o| &o.delay_est)),
                phase_samples: phases[i].len(),
                phase_std_rad: std_dev(&phases[i].values),
                differential_std_rad: std_dev(&diffs[i].values),
                band_power_db: bp,
            });
        }
        idx.files.push("summary.json".into());
        export::write_json(&dir.join("summary.json"), &idx)?;
    }
    Ok(idx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub density: f64,
    pub achieved_snr_db: f64,
    pub per_repeater_db: Vec<f64>,
    pub iterations: usize,
}

impl From<&NoiseCalibration> for CalibrationSummary {
    fn from(c: &NoiseCalibration) -> Self {
        CalibrationSummary {
            density: c.density,
            achieved_snr_db: c.achieved_snr_db,
            per_repeater_db: c.per_repeater_db.clone(),
            iterations: c.iterations,
        }
    }
}

/// Record of one run. Start and stop are simulated times so that
/// identical runs produce identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub capture_format_version: u32,
    pub record_format: RecordFormat,
    pub scenario: Scenario,
    pub seed: u64,
    pub calibration: Option<CalibrationSummary>,
    pub sim_time_start_s: f64,
    pub sim_time_stop_s: f64,
    pub stages_completed: Vec<String>,
    pub records: usize,
    pub outputs: Vec<OutputEntry>,
    pub error: Option<String>,
}

pub fn file_entry(root: &Path, rel: &str) -> Result<OutputEntry> {
    let bytes = fs::read(root.join(rel))?;
    Ok(OutputEntry {
        path: rel.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn observation_file(format: RecordFormat) -> &'static str {
    match format {
        RecordFormat::Jsonl => "observations.jsonl",
        RecordFormat::Binary => "observations.bin",
    }
}

/// simulate → process → analyze without intermediate files. Writes
/// `observations.*`, `analysis/` and `manifest.json` under `dir`.
pub fn cmd_e2e(sc: &Scenario, dir: &Path, products: &[Product]) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut sc = sc.clone();
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "e2e".into(),
        capture_format_version: CAPTURE_FORMAT_VERSION,
        record_format: sc.output.format,
        scenario: sc.clone(),
        seed: sc.run.seed,
        calibration: None,
        sim_time_start_s: sc.run.first_sweep as f64 * sc.sweep.sweep_period,
        sim_time_stop_s: sc.run.first_sweep as f64 * sc.sweep.sweep_period,
        stages_completed: Vec::new(),
        records: 0,
        outputs: Vec::new(),
        error: None,
    };
    let result = e2e_stages(&mut sc, dir, products, &mut manifest);
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    manifest.scenario = sc;
    export::write_json(&dir.join("manifest.json"), &manifest)?;
    result.map(|_| manifest)
}

fn e2e_stages(sc: &mut Scenario, dir: &Path, products: &[Product], m: &mut RunManifest) -> Result<()> {
    if let Some(cal) = sc.resolve_noise()? {
        m.calibration = Some(CalibrationSummary::from(&cal));
        m.stages_completed.push("calibrate".into());
    }
    let sim = sc.simulator()?;
    let obs_name = observation_file(sc.output.format);
    let w = BufWriter::new(File::create(dir.join(obs_name))?);
    let mut sink = RecordSink::new(sc, &sim.expected_delays(), sc.output.format, w)?;
    for c in BatchedCaptures::new(&sim, sc.sweep_indices(), sc.run.batch) {
        sink.push(c?)?;
    }
    m.stages_completed.push("simulate".into());
    m.records = sink.finish()?;
    m.sim_time_stop_s = sc.duration();
    m.stages_completed.push("process".into());
    m.outputs.push(file_entry(dir, obs_name)?);
    let obs = read_observations(&dir.join(obs_name))?;
    let idx = cmd_analyze(&obs, sc, &dir.join("analysis"), products)?;
    m.stages_completed.push("analyze".into());
    for f in idx.files {
        m.outputs.push(file_entry(dir, &format!("analysis/{f}"))?);
    }
    Ok(())
}

pub fn cmd_stream_tx(sc: &Scenario, listener: &TcpListener) -> Result<crate::stream::ServeStats> {
    let sim = sc.simulator()?;
    serve(listener, BatchedCaptures::new(&sim, sc.sweep_indices(), sc.run.batch))
}

pub fn cmd_stream_rx<W: Write>(sc: &Scenario, endpoint: &str, out: W, queue: usize) -> Result<ProcessReport> {
    let delays = sc.cable_model()?.delays(0.0);
    let mut sink = RecordSink::new(sc, &delays, sc.output.format, out)?;
    let mut consumer = consume(endpoint, sc.sweep.adc_bits, queue)?;
    for ev in consumer.by_ref() {
        if let StreamEvent::Capture { capture, .. } = ev? {
            sink.push(capture)?;
        }
    }
    let records = sink.finish()?;
    Ok(ProcessReport {
        records,
        stream: consumer.finish(),
    })
}
