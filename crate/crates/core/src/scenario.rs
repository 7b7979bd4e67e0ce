//! Scenario files: one TOML document describing the probe, the cable, the
//! laser, noise, injected events, receiver and analysis settings and the run.
//!
//! A scenario starts from a preset, is overlaid by a file and then by
//! `section.key=value` overrides. Unknown keys are rejected and every error
//! names the dotted path of the offending field.
//!
//! ```toml
//! preset = "transatlantic-mini"
//!
//! [run]
//! sweeps = 400
//! seed = 7
//!
//! [[events]]
//! kind = "sinusoid"
//! target = "phase"
//! span = 5
//! amplitude = 2.0
//! frequency = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{MovementConfig, SpectrogramConfig, WelchConfig};
use crate::cablesim::{
    calibrate_noise_floor, CableModel, LaserModel, NoiseCalibration, PerturbationEvent, RepeaterModel, SimOptions,
    Simulator, SpanModel, C_BAND_CARRIER_HZ,
};
use crate::dsp::{PhaseConvention, ReceiverConfig};
use crate::error::{Error, Result};
use crate::waveform::SweepConfig;

/// Uniform ASE density that puts each transatlantic-mini repeater at about
/// 30 dB SNR for a 1 s average (from `calibrate_noise_floor`, seed 11).
pub const MINI_ASE_DENSITY: f64 = 5.88e-10;

pub const PRESETS: [&str; 2] = ["transatlantic-mini", "transatlantic-full"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Birefringence {
    /// Identity Jones matrices on every span.
    #[default]
    None,
    /// Independent Haar-random unitary per span and direction.
    Random,
}

/// Explicit span; unset fields take the uniform defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanSpec {
    pub length_km: f64,
    pub loss_db: Option<f64>,
    pub group_index: Option<f64>,
    /// Repeater gain at the far end; defaults to the span loss.
    pub gain_db: Option<f64>,
    pub hllb_coupling_db: Option<f64>,
    /// Overrides `noise.ase_density` for this repeater.
    pub ase_density: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CableSection {
    /// Number of uniform spans, used when `span` is empty.
    pub spans: usize,
    pub span_length_km: f64,
    /// Explicit span list.
    pub span: Vec<SpanSpec>,
    pub hllb_coupling_db: f64,
    pub birefringence: Birefringence,
    /// Return-path perturbation as a fraction of the forward one.
    pub return_correlation: f64,
    /// Delay drift also drives optical phase at `carrier_hz`.
    pub delay_phase_coupling: bool,
    pub carrier_hz: f64,
}

impl Default for CableSection {
    fn default() -> Self {
        CableSection {
            spans: 8,
            span_length_km: 10.0,
            span: Vec::new(),
            hllb_coupling_db: -45.0,
            birefringence: Birefringence::None,
            return_correlation: 1.0,
            delay_phase_coupling: false,
            carrier_hz: C_BAND_CARRIER_HZ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserSection {
    pub enabled: bool,
    pub model: LaserModel,
}

impl Default for LaserSection {
    fn default() -> Self {
        LaserSection {
            enabled: true,
            model: LaserModel::free_running(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationTarget {
    pub snr_db: f64,
    /// Averaging time the target refers to, s.
    pub averaging_s: f64,
    pub seed: u64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        CalibrationTarget {
            snr_db: 30.0,
            averaging_s: 1.0,
            seed: 11,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Per-repeater ASE density, 1/Hz relative to launch power.
    pub ase_density: f64,
    /// Noise not attributed to any repeater, same units.
    pub extra_density: f64,
    /// When set, `ase_density` is replaced by the calibrated value.
    pub calibrate: Option<CalibrationTarget>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub convention: PhaseConvention,
    pub welch: WelchConfig,
    pub spectrogram: SpectrogramConfig,
    pub movement: MovementConfig,
    /// Low and high frequency of the band-power summary, Hz.
    pub band: (f64, f64),
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            convention: PhaseConvention::default(),
            welch: WelchConfig::default(),
            spectrogram: SpectrogramConfig::default(),
            movement: MovementConfig::default(),
            band: (0.1, 10.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub sweeps: u64,
    pub first_sweep: u64,
    pub seed: u64,
    pub adc_backoff_db: f64,
    pub laser_track_rate: f64,
    /// Worker threads for the parallel stages; 0 uses every core.
    pub threads: usize,
    /// Captures per processing batch (bounded queue depth).
    pub batch: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let o = SimOptions::default();
        RunSection {
            sweeps: 200,
            first_sweep: 0,
            seed: 1,
            adc_backoff_db: o.adc_backoff_db,
            laser_track_rate: o.laser_track_rate,
            threads: 0,
            batch: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFormat {
    #[default]
    Jsonl,
    Binary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: RecordFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub sweep: SweepConfig,
    pub cable: CableSection,
    pub laser: LaserSection,
    pub noise: NoiseSection,
    pub events: Vec<PerturbationEvent>,
    pub receiver: ReceiverConfig,
    pub analysis: AnalysisSection,
    pub run: RunSection,
    pub output: OutputSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::transatlantic_mini()
    }
}

impl Scenario {
    /// Eight 10 km spans at desk rates, free-running laser, ASE set for
    /// ~30 dB at 1 s.
    pub fn transatlantic_mini() -> Self {
        let mut analysis = AnalysisSection::default();
        analysis.spectrogram = SpectrogramConfig {
            window_len: 64,
            overlap: 0.5,
            averages: 1,
            band: Some((1.0, 250.0)),
        };
        analysis.band = (1.0, 50.0);
        Scenario {
            name: "transatlantic-mini".into(),
            sweep: SweepConfig::desk(),
            cable: CableSection::default(),
            laser: LaserSection::default(),
            noise: NoiseSection {
                ase_density: MINI_ASE_DENSITY,
                ..Default::default()
            },
            events: Vec::new(),
            // single sweeps sit near 3 dB at this noise level
            receiver: ReceiverConfig {
                average: 32,
                ..Default::default()
            },
            analysis,
            run: RunSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Eighty 80 km spans at field-trial rates (2 GS/s, 70 ms sweeps). Each
    /// sweep is 1.4·10⁸ samples, so runs are short by default.
    pub fn transatlantic_full() -> Self {
        Scenario {
            name: "transatlantic-full".into(),
            sweep: SweepConfig::long_haul(),
            cable: CableSection {
                spans: 80,
                span_length_km: 80.0,
                ..Default::default()
            },
            noise: NoiseSection {
                ase_density: 0.0,
                ..Default::default()
            },
            run: RunSection {
                sweeps: 4,
                ..Default::default()
            },
            analysis: AnalysisSection::default(),
            ..Self::transatlantic_mini()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "transatlantic-mini" => Ok(Self::transatlantic_mini()),
            "transatlantic-full" => Ok(Self::transatlantic_full()),
            other => Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
            )),
        }
    }

    /// Parses a scenario document over `base` (or over the preset the
    /// document names, or the default preset).
    pub fn from_toml_str(text: &str, base: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<scenario>", e.message().to_string()))?;
        let named = match doc.remove("preset") {
            Some(toml::Value::String(s)) => Some(s),
            Some(_) => return Err(Error::config("preset", "must be a string")),
            None => None,
        };
        let preset = base.map(String::from).or(named);
        let mut value = Self::base_value(preset.as_deref())?;
        merge(&mut value, doc);
        Self::finish(value, overrides)
    }

    /// Loads `path` (if any) over a preset and applies overrides.
    pub fn load(path: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Self::from_toml_str(&text, preset, overrides)
            }
            None => Self::finish(Self::base_value(preset)?, overrides),
        }
    }

    fn base_value(preset: Option<&str>) -> Result<toml::Table> {
        let s = match preset {
            Some(p) => Self::preset(p)?,
            None => Self::default(),
        };
        toml::Table::try_from(&s).map_err(|e| Error::Malformed(format!("preset does not serialize: {e}")))
    }

    fn finish(mut value: toml::Table, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let de = toml::Value::Table(value);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<scenario>".into() } else { path }, e.into_inner().to_string())
        })?;
        s.validate()?;
        Ok(s)
    }

    /// This scenario with `section.key=value` overrides applied.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let base =
            toml::Table::try_from(self).map_err(|e| Error::Malformed(format!("scenario does not serialize: {e}")))?;
        Self::finish(base, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        self.receiver.validate()?;
        self.analysis.welch.validate()?;
        self.analysis.spectrogram.validate()?;
        if self.run.sweeps == 0 {
            return Err(Error::config("run.sweeps", "must be >= 1"));
        }
        if self.run.batch == 0 {
            return Err(Error::config("run.batch", "must be >= 1"));
        }
        if !(self.run.laser_track_rate > 0.0) {
            return Err(Error::config("run.laser_track_rate", "must be > 0"));
        }
        if self.laser.enabled {
            self.laser.model.validate()?;
        }
        if self.cable.span.is_empty() && self.cable.spans == 0 {
            return Err(Error::config("cable.spans", "must be >= 1"));
        }
        let (lo, hi) = self.analysis.band;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::config("analysis.band", "must satisfy 0 <= low <= high"));
        }
        self.cable_model()?;
        Ok(())
    }

    pub fn cable_model(&self) -> Result<CableModel> {
        let c = &self.cable;
        let specs: Vec<SpanSpec> = if c.span.is_empty() {
            vec![
                SpanSpec {
                    length_km: c.span_length_km,
                    ..Default::default()
                };
                c.spans
            ]
        } else {
            c.span.clone()
        };
        let mut spans = Vec::with_capacity(specs.len());
        let mut reps = Vec::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if !(s.length_km > 0.0) {
                let field = if c.span.is_empty() {
                    "cable.span_length_km".to_string()
                } else {
                    format!("cable.span[{i}].length_km")
                };
                return Err(Error::config(field, "must be > 0"));
            }
            let mut span = SpanModel::new(s.length_km);
            if let Some(l) = s.loss_db {
                span.loss_db = l;
            }
            if let Some(n) = s.group_index {
                span.group_index = n;
            }
            let mut rep = RepeaterModel::new(s.gain_db.unwrap_or(span.loss_db));
            rep.hllb_coupling_db = s.hllb_coupling_db.unwrap_or(c.hllb_coupling_db);
            rep.ase_noise_density = s.ase_density.unwrap_or(self.noise.ase_density);
            spans.push(span);
            reps.push(rep);
        }
        if !(self.noise.ase_density >= 0.0 && self.noise.ase_density.is_finite()) {
            return Err(Error::config("noise.ase_density", "must be finite and >= 0"));
        }
        let mut model = CableModel::new(spans, reps, self.run.seed)?
            .with_return_correlation(c.return_correlation)?
            .with_extra_noise_density(self.noise.extra_density)?
            .with_delay_phase_coupling(c.delay_phase_coupling.then_some(c.carrier_hz))
            .with_events(self.events.clone())?;
        if c.birefringence == Birefringence::Random {
            model = model.with_random_birefringence();
        }
        Ok(model)
    }

    pub fn laser_model(&self) -> Option<&LaserModel> {
        self.laser.enabled.then_some(&self.laser.model)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            adc_backoff_db: self.run.adc_backoff_db,
            laser_track_rate: self.run.laser_track_rate,
        }
    }

    /// Simulated time covered by the run, s.
    pub fn duration(&self) -> f64 {
        (self.run.first_sweep + self.run.sweeps) as f64 * self.sweep.sweep_period
    }

    pub fn sweep_indices(&self) -> std::ops::Range<u64> {
        self.run.first_sweep..self.run.first_sweep + self.run.sweeps
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(
            self.sweep.clone(),
            self.cable_model()?,
            self.laser_model(),
            self.duration(),
            self.run.seed,
            self.sim_options(),
        )
    }

    /// Runs the noise calibration if one is requested and stores the
    /// resulting density.
    pub fn resolve_noise(&mut self) -> Result<Option<NoiseCalibration>> {
        let Some(target) = self.noise.calibrate.clone() else {
            return Ok(None);
        };
        let quiet = Scenario {
            events: Vec::new(),
            noise: NoiseSection {
                ase_density: 0.0,
                ..self.noise.clone()
            },
            ..self.clone()
        };
        let cal = calibrate_noise_floor(
            &quiet.cable_model()?,
            &self.sweep,
            target.snr_db,
            target.averaging_s,
            target.seed,
        )?;
        self.noise.ase_density = cal.density;
        self.noise.calibrate = None;
        Ok(Some(cal))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value`. The value is read as a TOML literal, falling back
/// to a bare string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment.trim(), "override must look like `section.key=value`"))?;
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if path.is_empty() || keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty key in override path"));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut table = doc;
    for (i, k) in keys[..keys.len() - 1].iter().enumerate() {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::config(keys[..=i].join("."), "is not a table")),
        };
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
