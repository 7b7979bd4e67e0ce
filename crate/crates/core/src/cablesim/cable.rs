//! Static cable geometry and time-varying perturbations.
//!
//! Spans are numbered `1..=K`; repeater `k` sits at the far end of span `k`
//! and index `0` is the launch point. Each repeater couples a small fraction
//! of its forward output into the return fiber (the high-loss loopback), so
//! every repeater shows up as a discrete reflector.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::Jones;
use crate::rng;

/// km/s
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Default optical carrier for the coupled delay/phase mode, Hz.
pub const C_BAND_CARRIER_HZ: f64 = 193.4e12;

#[derive(Clone, Debug, PartialEq)]
pub struct SpanModel {
    pub length_km: f64,
    pub group_index: f64,
    pub loss_db: f64,
    pub jones_fwd: Jones,
    pub jones_ret: Jones,
}

impl SpanModel {
    /// A span with 0.2 dB/km loss, group index 1.468 and no polarization
    /// rotation.
    pub fn new(length_km: f64) -> Self {
        SpanModel {
            length_km,
            group_index: 1.468,
            loss_db: 0.2 * length_km,
            jones_fwd: Jones::identity(),
            jones_ret: Jones::identity(),
        }
    }

    /// One-way propagation delay without drift, seconds.
    pub fn one_way_delay(&self) -> f64 {
        self.length_km * self.group_index / SPEED_OF_LIGHT_KM_S
    }

    fn validate(&self, i: usize) -> Result<()> {
        if !(self.length_km > 0.0 && self.length_km.is_finite()) {
            return Err(Error::config(format!("cable.spans[{i}].length_km"), "must be > 0"));
        }
        if !(self.loss_db >= 0.0 && self.loss_db.is_finite()) {
            return Err(Error::config(format!("cable.spans[{i}].loss_db"), "must be >= 0"));
        }
        if !(self.group_index > 0.0) {
            return Err(Error::config(format!("cable.spans[{i}].group_index"), "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeaterModel {
    pub gain_db: f64,
    /// Loopback coupling, dB (<= 0).
    pub hllb_coupling_db: f64,
    /// ASE added by the return-path amplifier, one-sided power density per
    /// receive polarization relative to the launched probe power, 1/Hz.
    pub ase_noise_density: f64,
    /// Polarization transfer of the loopback coupler.
    pub coupling: Jones,
}

impl RepeaterModel {
    pub fn new(gain_db: f64) -> Self {
        RepeaterModel {
            gain_db,
            hllb_coupling_db: -45.0,
            ase_noise_density: 0.0,
            coupling: Jones::identity(),
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        if !(self.gain_db >= 0.0) {
            return Err(Error::config(format!("cable.repeaters[{i}].gain_db"), "must be >= 0"));
        }
        if !(self.hllb_coupling_db <= 0.0) {
            return Err(Error::config(
                format!("cable.repeaters[{i}].hllb_coupling_db"),
                "must be <= 0",
            ));
        }
        if !(self.ase_noise_density >= 0.0 && self.ase_noise_density.is_finite()) {
            return Err(Error::config(
                format!("cable.repeaters[{i}].ase_noise_density"),
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// `A·sin(2πf(t − start))` on `[start, stop)`.
    Sinusoid,
    /// Ramps from 0 to `A` over `[start, stop]`, then holds `A`.
    LinearDrift,
    /// Brownian motion with `A` rms per √s, sampled at `frequency` Hz on
    /// `[start, stop]`, held afterwards.
    RandomWalk,
    /// `A` on `[start, stop)`, zero elsewhere.
    Step,
    /// Sinusoid whose frequency sweeps linearly from 0 to `frequency` over
    /// `[start, stop)`.
    Chirp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationTarget {
    /// Amplitude in radians, one-way.
    #[default]
    Phase,
    /// Amplitude in nanoseconds, one-way.
    Delay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationEvent {
    pub kind: PerturbationKind,
    #[serde(default)]
    pub target: PerturbationTarget,
    /// 1-based span number.
    pub span: usize,
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "forever")]
    pub stop: f64,
}

fn forever() -> f64 {
    f64::INFINITY
}

impl PerturbationEvent {
    pub fn sinusoid(span: usize, amplitude: f64, frequency: f64) -> Self {
        PerturbationEvent {
            kind: PerturbationKind::Sinusoid,
            target: PerturbationTarget::Phase,
            span,
            amplitude,
            frequency,
            start: 0.0,
            stop: f64::INFINITY,
        }
    }

    /// Delay ramp of `ns` nanoseconds over `[start, stop]`.
    pub fn delay_drift(span: usize, ns: f64, start: f64, stop: f64) -> Self {
        PerturbationEvent {
            kind: PerturbationKind::LinearDrift,
            target: PerturbationTarget::Delay,
            span,
            amplitude: ns,
            frequency: 0.0,
            start,
            stop,
        }
    }

    fn value(&self, t: f64, walk: Option<&[f64]>) -> f64 {
        let a = self.amplitude;
        match self.kind {
            PerturbationKind::Sinusoid => {
                if t >= self.start && t < self.stop {
                    a * (TAU * self.frequency * (t - self.start)).sin()
                } else {
                    0.0
                }
            }
            PerturbationKind::LinearDrift => {
                if t <= self.start {
                    0.0
                } else if t >= self.stop {
                    a
                } else {
                    a * (t - self.start) / (self.stop - self.start)
                }
            }
            PerturbationKind::Step => {
                if t >= self.start && t < self.stop {
                    a
                } else {
                    0.0
                }
            }
            PerturbationKind::Chirp => {
                if t >= self.start && t < self.stop {
                    let dt = t - self.start;
                    let rate = self.frequency / (self.stop - self.start);
                    a * (TAU * 0.5 * rate * dt * dt).sin()
                } else {
                    0.0
                }
            }
            PerturbationKind::RandomWalk => {
                let walk = walk.expect("random walk precomputed");
                if t <= self.start || walk.is_empty() {
                    return 0.0;
                }
                let pos = (t - self.start) * self.frequency;
                let last = walk.len() - 1;
                if pos >= last as f64 {
                    return walk[last];
                }
                let i = pos.floor() as usize;
                let frac = pos - i as f64;
                walk[i] + (walk[i + 1] - walk[i]) * frac
            }
        }
    }

    fn validate(&self, i: usize, spans: usize) -> Result<()> {
        let field = |f: &str| format!("events[{i}].{f}");
        if self.span == 0 || self.span > spans {
            return Err(Error::config(
                field("span"),
                format!("must lie in 1..={spans}, got {}", self.span),
            ));
        }
        if !(self.start < self.stop) {
            return Err(Error::config(field("stop"), "start must be < stop"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config(field("amplitude"), "must be finite"));
        }
        match self.kind {
            PerturbationKind::RandomWalk => {
                if !(self.frequency > 0.0) || !self.stop.is_finite() {
                    return Err(Error::config(
                        field("frequency"),
                        "random walk needs a grid rate > 0 and a finite stop",
                    ));
                }
                let points = (self.stop - self.start) * self.frequency;
                if points > 5e7 {
                    return Err(Error::config(field("frequency"), "random walk grid too large"));
                }
            }
            PerturbationKind::Chirp if !self.stop.is_finite() => {
                return Err(Error::config(field("stop"), "chirp needs a finite stop"));
            }
            _ => {}
        }
        Ok(())
    }
}

/// The cable: ordered spans, one repeater per span end, and perturbations.
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct CableModel {
    spans: Vec<SpanModel>,
    repeaters: Vec<RepeaterModel>,
    events: Vec<PerturbationEvent>,
    walks: Vec<Option<Vec<f64>>>,
    seed: u64,
    /// Scale of the return-path perturbation relative to the forward one.
    return_correlation: f64,
    /// Optical carrier when delay drift also drives phase (`2π·ν₀·δτ`).
    coupled_carrier: Option<f64>,
    /// Broadband noise density not attributed to any repeater (e.g. live
    /// traffic), same units as the repeater ASE density.
    extra_noise_density: f64,
}

impl CableModel {
    pub fn new(spans: Vec<SpanModel>, repeaters: Vec<RepeaterModel>, seed: u64) -> Result<Self> {
        if spans.len() != repeaters.len() {
            return Err(Error::config(
                "cable.repeaters",
                format!("{} repeaters for {} spans", repeaters.len(), spans.len()),
            ));
        }
        for (i, s) in spans.iter().enumerate() {
            s.validate(i)?;
        }
        for (i, r) in repeaters.iter().enumerate() {
            r.validate(i)?;
        }
        Ok(CableModel {
            spans,
            repeaters,
            events: Vec::new(),
            walks: Vec::new(),
            seed,
            return_correlation: 1.0,
            coupled_carrier: None,
            extra_noise_density: 0.0,
        })
    }

    /// `count` identical spans with gain equal to span loss.
    pub fn uniform(count: usize, length_km: f64, seed: u64) -> Result<Self> {
        let span = SpanModel::new(length_km);
        let rep = RepeaterModel::new(span.loss_db);
        Self::new(vec![span; count], vec![rep; count], seed)
    }

    pub fn with_events(mut self, events: Vec<PerturbationEvent>) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            e.validate(i, self.spans.len())?;
        }
        self.walks = events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                (e.kind == PerturbationKind::RandomWalk).then(|| {
                    let n = ((e.stop - e.start) * e.frequency).ceil() as usize + 1;
                    let step = e.amplitude / e.frequency.sqrt();
                    let mut r = rng::stream(self.seed, rng::DOMAIN_WALK, i as u64);
                    let mut acc = 0.0;
                    let mut walk = Vec::with_capacity(n);
                    walk.push(0.0);
                    for _ in 1..n {
                        let g: f64 = StandardNormal.sample(&mut r);
                        acc += step * g;
                        walk.push(acc);
                    }
                    walk
                })
            })
            .collect();
        self.events = events;
        Ok(self)
    }

    pub fn with_return_correlation(mut self, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::config("cable.return_correlation", "must lie in [0, 1]"));
        }
        self.return_correlation = rho;
        Ok(self)
    }

    /// Enables the coupled mode in which a delay drift `δτ` on a span also
    /// adds `2π·ν₀·δτ` to that span's phase.
    pub fn with_delay_phase_coupling(mut self, carrier_hz: Option<f64>) -> Self {
        self.coupled_carrier = carrier_hz;
        self
    }

    pub fn with_extra_noise_density(mut self, density: f64) -> Result<Self> {
        if !(density >= 0.0 && density.is_finite()) {
            return Err(Error::config("noise.extra_density", "must be finite and >= 0"));
        }
        self.extra_noise_density = density;
        Ok(self)
    }

    /// Replaces every span's forward and return Jones matrix with an
    /// independent Haar-random unitary drawn from the cable seed.
    pub fn with_random_birefringence(mut self) -> Self {
        let mut r = rng::stream(self.seed, rng::DOMAIN_JONES, 0);
        let mut draw = || {
            let u: f64 = r.random();
            let a: [f64; 3] = [r.random(), r.random(), r.random()];
            Jones::unitary(u.sqrt().asin(), TAU * a[0], TAU * a[1], TAU * a[2])
        };
        for s in &mut self.spans {
            s.jones_fwd = draw();
            s.jones_ret = draw();
        }
        self
    }

    /// Sets every repeater's ASE density.
    pub fn with_uniform_ase(mut self, density: f64) -> Result<Self> {
        if !(density >= 0.0 && density.is_finite()) {
            return Err(Error::config("noise.ase_density", "must be finite and >= 0"));
        }
        for r in &mut self.repeaters {
            r.ase_noise_density = density;
        }
        Ok(self)
    }

    pub fn spans(&self) -> &[SpanModel] {
        &self.spans
    }

    pub fn repeaters(&self) -> &[RepeaterModel] {
        &self.repeaters
    }

    pub fn events(&self) -> &[PerturbationEvent] {
        &self.events
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of repeaters (= spans).
    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.len() {
            Err(Error::IndexOutOfRange {
                index: k,
                count: self.len(),
            })
        } else {
            Ok(())
        }
    }

    fn event_sum(&self, span: usize, target: PerturbationTarget, t: f64) -> f64 {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.span == span && e.target == target)
            .map(|(i, e)| e.value(t, self.walks.get(i).and_then(|w| w.as_deref())))
            .sum()
    }

    /// One-way delay drift of span `i` (1-based) at time `t`, seconds.
    pub fn span_drift(&self, i: usize, t: f64) -> f64 {
        self.event_sum(i, PerturbationTarget::Delay, t) * 1e-9
    }

    /// One-way phase of span `i` (1-based) at time `t`, radians.
    pub fn span_phase(&self, i: usize, t: f64) -> f64 {
        let mut p = self.event_sum(i, PerturbationTarget::Phase, t);
        if let Some(nu0) = self.coupled_carrier {
            p += TAU * nu0 * self.span_drift(i, t);
        }
        p
    }

    /// Round-trip group delay to repeater `k` at time `t`. Drift counts on
    /// both passes.
    pub fn roundtrip_delay(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        Ok((1..=k)
            .map(|i| 2.0 * (self.spans[i - 1].one_way_delay() + self.span_drift(i, t)))
            .sum())
    }

    /// Round-trip perturbation phase to repeater `k`: forward plus
    /// `return_correlation` times forward, summed over spans `1..=k`.
    pub fn roundtrip_phase(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        let factor = 1.0 + self.return_correlation;
        Ok((1..=k).map(|i| factor * self.span_phase(i, t)).sum())
    }

    /// Polarization transfer launch → repeater `k` → receiver:
    /// `J₁ʳ···Jₖʳ · Cₖ · Jₖᶠ···J₁ᶠ`. Repeater 0 is the identity.
    pub fn roundtrip_jones(&self, k: usize, _t: f64) -> Result<Jones> {
        self.check_index(k)?;
        if k == 0 {
            return Ok(Jones::identity());
        }
        let mut fwd = Jones::identity();
        for span in &self.spans[..k] {
            fwd = span.jones_fwd * fwd;
        }
        // return light crosses span k first: J₁ʳ·J₂ʳ···Jₖʳ
        let mut ret_path = Jones::identity();
        for span in self.spans[..k].iter().rev() {
            ret_path = span.jones_ret * ret_path;
        }
        Ok(ret_path * self.repeaters[k - 1].coupling * fwd)
    }

    /// Field amplitude of the echo from repeater `k` relative to the launched
    /// field.
    pub fn roundtrip_amplitude(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        if k == 0 {
            return Ok(1.0);
        }
        let rep = &self.repeaters[k - 1];
        let power = self.forward_gain(k) * db(rep.hllb_coupling_db) * self.return_gain(k);
        Ok(power.sqrt())
    }

    /// Linear power gain from launch to the output of repeater `k`.
    fn forward_gain(&self, k: usize) -> f64 {
        (0..k)
            .map(|i| db(-self.spans[i].loss_db) * db(self.repeaters[i].gain_db))
            .product()
    }

    /// Linear power gain from the return output of repeater `j` to the
    /// receiver.
    fn return_gain(&self, j: usize) -> f64 {
        let losses: f64 = (0..j).map(|i| db(-self.spans[i].loss_db)).product();
        let gains: f64 = (0..j.saturating_sub(1))
            .map(|i| db(self.repeaters[i].gain_db))
            .product();
        losses * gains
    }

    /// Total white noise density at the receiver, per receive polarization.
    pub fn noise_density(&self) -> f64 {
        let ase: f64 = (1..=self.len())
            .map(|j| self.repeaters[j - 1].ase_noise_density * self.return_gain(j))
            .sum();
        ase + self.extra_noise_density
    }

    /// Round-trip delays of repeaters `1..=K` at time `t`.
    pub fn delays(&self, t: f64) -> Vec<f64> {
        (1..=self.len())
            .map(|k| self.roundtrip_delay(k, t).expect("in range"))
            .collect()
    }

    /// Per-span unitarity deviation of the forward and return Jones matrices.
    pub fn unitarity_report(&self) -> Vec<(f64, f64)> {
        self.spans
            .iter()
            .map(|s| (s.jones_fwd.unitarity_deviation(), s.jones_ret.unitarity_deviation()))
            .collect()
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}
