//! Pulse compression by correlation with the reference sweep.
//!
//! Correlation convention: `c[ℓ] = Σ_t z[t+ℓ]·s*[t]`, so an echo delayed by
//! `ℓ` samples peaks at bin `ℓ`. The peak phase then carries `φ − 2π·f_IF·τ`
//! plus `2π·f_IF·ℓ/fs`; [`derotate`] removes the bin-dependent term.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::capture::SweepCapture;
use crate::error::{Error, Result};
use crate::waveform::{Polarization, ProbeWaveform, SweepConfig};

/// Complex delay profile of one sweep (or an average of several), one array
/// per receive polarization. Bin spacing is `1/fs`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpulseResponse {
    pub sweep_index: u64,
    pub launch_pol: Polarization,
    pub timestamp_ns: u64,
    pub sample_rate: f64,
    pub sweep_bandwidth: f64,
    /// `[X-receive, Y-receive]`.
    pub bins: [Vec<Complex64>; 2],
    /// Number of sweeps averaged into this response.
    pub averaged: usize,
    /// False when the response came from circular correlation of a single
    /// capture, whose first `τ` samples belong to the previous sweep.
    pub aligned: bool,
}

impl ImpulseResponse {
    pub fn len(&self) -> usize {
        self.bins[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins[0].is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.timestamp_ns as f64 * 1e-9
    }

    /// Sweep period implied by the response length.
    pub fn sweep_period(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    /// `|X|² + |Y|²` per bin.
    pub fn power(&self) -> Vec<f64> {
        self.bins[0]
            .iter()
            .zip(&self.bins[1])
            .map(|(x, y)| x.norm_sqr() + y.norm_sqr())
            .collect()
    }

    pub fn column(&self, bin: usize) -> [Complex64; 2] {
        [self.bins[0][bin], self.bins[1][bin]]
    }
}

/// Removes the `2π·f_IF·bin/fs` phase a peak picks up from its bin position.
pub fn derotate(value: Complex64, bin: usize, if_center: f64, sample_rate: f64) -> Complex64 {
    let cycles = (if_center * bin as f64 / sample_rate).fract();
    value * Complex64::from_polar(1.0, -TAU * cycles)
}

/// Precomputed reference spectra and FFT plans for one sweep configuration.
pub struct MatchedFilter {
    n: usize,
    sample_rate: f64,
    sweep_bandwidth: f64,
    ref_n: Vec<Complex64>,
    ref_2n: Vec<Complex64>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_2n: Arc<dyn Fft<f64>>,
    inv_2n: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MatchedFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatchedFilter")
            .field("n", &self.n)
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

impl MatchedFilter {
    pub fn new(cfg: &SweepConfig, reference: &ProbeWaveform) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.samples_per_sweep();
        if reference.samples.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: reference.samples.len(),
            });
        }
        let mut planner = FftPlanner::<f64>::new();
        let fwd_n = planner.plan_fft_forward(n);
        let inv_n = planner.plan_fft_inverse(n);
        let fwd_2n = planner.plan_fft_forward(2 * n);
        let inv_2n = planner.plan_fft_inverse(2 * n);

        let mut ref_n = reference.samples.clone();
        fwd_n.process(&mut ref_n);
        ref_n.iter_mut().for_each(|z| *z = z.conj());

        let mut ref_2n = reference.samples.clone();
        ref_2n.resize(2 * n, Complex64::new(0.0, 0.0));
        fwd_2n.process(&mut ref_2n);
        ref_2n.iter_mut().for_each(|z| *z = z.conj());

        Ok(MatchedFilter {
            n,
            sample_rate: cfg.sample_rate,
            sweep_bandwidth: cfg.sweep_bandwidth,
            ref_n,
            ref_2n,
            fwd_n,
            inv_n,
            fwd_2n,
            inv_2n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, c: &SweepCapture) -> Result<()> {
        c.validate()?;
        if c.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: c.len(),
            });
        }
        Ok(())
    }

    /// Circular correlation of one capture with the reference.
    pub fn circular(&self, capture: &SweepCapture) -> Result<ImpulseResponse> {
        self.check(capture)?;
        let scale = code_scale(capture.adc_bits);
        let mut w: Vec<Complex64> = capture.channels[0]
            .iter()
            .zip(&capture.channels[1])
            .map(|(&x, &y)| Complex64::new(x as f64 * scale, y as f64 * scale))
            .collect();
        let bins = self.correlate(&mut w, &self.ref_n, &*self.fwd_n, &*self.inv_n, self.n);
        Ok(self.response(capture, bins, false))
    }

    /// Linear correlation of capture `m` followed by capture `m + 1` with
    /// the reference, lags `0..N`. Every lag then sees one complete emitted
    /// sweep, so the response holds a single launch polarization.
    pub fn aligned(&self, capture: &SweepCapture, next: &SweepCapture) -> Result<ImpulseResponse> {
        self.check(capture)?;
        self.check(next)?;
        if next.sweep_index != capture.sweep_index + 1 || next.adc_bits != capture.adc_bits {
            return Err(Error::Malformed(format!(
                "aligned filtering needs consecutive sweeps, got {} and {}",
                capture.sweep_index, next.sweep_index
            )));
        }
        let scale = code_scale(capture.adc_bits);
        let mut w: Vec<Complex64> = Vec::with_capacity(2 * self.n);
        for c in [capture, next] {
            w.extend(
                c.channels[0]
                    .iter()
                    .zip(&c.channels[1])
                    .map(|(&x, &y)| Complex64::new(x as f64 * scale, y as f64 * scale)),
            );
        }
        let bins = self.correlate(&mut w, &self.ref_2n, &*self.fwd_2n, &*self.inv_2n, self.n);
        Ok(self.response(capture, bins, true))
    }

    /// Aligned when `next` is the following sweep, circular otherwise.
    pub fn filter(&self, capture: &SweepCapture, next: Option<&SweepCapture>) -> Result<ImpulseResponse> {
        match next {
            Some(nx) if nx.sweep_index == capture.sweep_index + 1 => self.aligned(capture, nx),
            _ => self.circular(capture),
        }
    }

    fn response(&self, c: &SweepCapture, bins: [Vec<Complex64>; 2], aligned: bool) -> ImpulseResponse {
        ImpulseResponse {
            sweep_index: c.sweep_index,
            launch_pol: c.launch_pol,
            timestamp_ns: c.timestamp_ns,
            sample_rate: self.sample_rate,
            sweep_bandwidth: self.sweep_bandwidth,
            bins,
            averaged: 1,
            aligned,
        }
    }

    /// `w = x + j·y` holds both real channels. One forward transform yields
    /// both spectra; each is made analytic (positive bins doubled), matched
    /// against `reference` (already conjugated) and inverted.
    fn correlate(
        &self,
        w: &mut [Complex64],
        reference: &[Complex64],
        fwd: &dyn Fft<f64>,
        inv: &dyn Fft<f64>,
        keep: usize,
    ) -> [Vec<Complex64>; 2] {
        let len = w.len();
        fwd.process(w);
        let zero = Complex64::new(0.0, 0.0);
        let mut zx = vec![zero; len];
        let mut zy = vec![zero; len];
        let half = len / 2;
        let minus_j = Complex64::new(0.0, -1.0);
        for k in 0..=half {
            let a = w[k];
            let b = w[(len - k) % len].conj();
            // X(k) = (a + b)/2, Y(k) = (a − b)/(2j); analytic doubles k ∈ (0, L/2)
            let (sx, sy) = if k == 0 || (len % 2 == 0 && k == half) {
                ((a + b) * 0.5, (a - b) * minus_j * 0.5)
            } else {
                (a + b, (a - b) * minus_j)
            };
            zx[k] = sx * reference[k];
            zy[k] = sy * reference[k];
        }
        inv.process(&mut zx);
        inv.process(&mut zy);
        let norm = 1.0 / len as f64;
        zx.truncate(keep);
        zy.truncate(keep);
        zx.iter_mut().for_each(|z| *z *= norm);
        zy.iter_mut().for_each(|z| *z *= norm);
        [zx, zy]
    }
}

fn code_scale(bits: u32) -> f64 {
    1.0 / (1u32 << (bits - 1)) as f64
}

/// One-shot circular matched filter.
pub fn matched_filter(
    capture: &SweepCapture,
    reference: &ProbeWaveform,
    cfg: &SweepConfig,
) -> Result<ImpulseResponse> {
    MatchedFilter::new(cfg, reference)?.circular(capture)
}

/// Analytic signal of a real sequence: negative-frequency bins zeroed,
/// positive ones doubled.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(len).process(&mut buf);
    let half = len / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        if k == 0 || (len % 2 == 0 && k == half) {
            continue;
        }
        if k < len.div_ceil(2) {
            *z *= 2.0;
        } else {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let norm = 1.0 / len as f64;
    buf.iter_mut().for_each(|z| *z *= norm);
    buf
}

/// Circular cross-correlation `c[ℓ] = Σ_t a[(t+ℓ) mod N]·b*[t]` by the
/// transform route.
pub fn circular_xcorr(a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let len = a.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    planner.plan_fft_inverse(len).process(&mut fa);
    let norm = 1.0 / len as f64;
    fa.iter_mut().for_each(|z| *z *= norm);
    Ok(fa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::capture::timestamp_ns;
    use crate::waveform::generate_sweep;

    fn direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|l| (0..n).map(|t| a[(t + l) % n] * b[t].conj()).sum())
            .collect()
    }

    fn short_cfg() -> SweepConfig {
        // 2000 samples per sweep
        SweepConfig {
            sweep_period: 40e-6,
            ..SweepConfig::desk()
        }
    }

    fn capture_from(cfg: &SweepConfig, m: u64, re: &[Complex64], shift: usize) -> SweepCapture {
        let bits = 16;
        let full = (1u32 << (bits - 1)) as f64;
        let n = re.len();
        let x: Vec<i16> = (0..n)
            .map(|i| (re[(i + n - shift) % n].re * 0.5 * full).round() as i16)
            .collect();
        SweepCapture {
            sweep_index: m,
            launch_pol: cfg.launch_pol(m),
            timestamp_ns: timestamp_ns(m, cfg.sweep_period),
            adc_bits: bits,
            channels: [x, vec![0; n]],
        }
    }

    #[test]
    fn xcorr_matches_direct() {
        let a: Vec<Complex64> = (0..97).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64).cos())).collect();
        let b: Vec<Complex64> = (0..97).map(|i| Complex64::new((i as f64 * 1.3).cos(), 0.2 * i as f64 % 1.0)).collect();
        let f = circular_xcorr(&a, &b).unwrap();
        let d = direct(&a, &b);
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).norm() < 1e-9 * y.norm().max(1.0));
        }
    }

    #[test]
    fn analytic_of_cosine_is_phasor() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| (TAU * 5.0 * i as f64 / n as f64).cos()).collect();
        let z = analytic_signal(&x);
        for (i, v) in z.iter().enumerate() {
            let want = Complex64::from_polar(1.0, TAU * 5.0 * i as f64 / n as f64);
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn loopback_peak_is_n_at_bin_zero() {
        let cfg = short_cfg();
        let r = generate_sweep(&cfg, 0).unwrap();
        let cap = capture_from(&cfg, 0, &r.samples, 0);
        let ir = matched_filter(&cap, &r, &cfg).unwrap();
        let p = ir.power();
        let best = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        assert_eq!(best, 0);
        // capture carries 0.5·Re(s): analytic part is 0.5·s
        let n = cfg.samples_per_sweep() as f64;
        assert!((ir.bins[0][0].norm() / (0.5 * n) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn packed_channels_match_separate_filtering() {
        let cfg = short_cfg();
        let r = generate_sweep(&cfg, 0).unwrap();
        let mut cap = capture_from(&cfg, 0, &r.samples, 250);
        let other = capture_from(&cfg, 0, &r.samples, 40);
        cap.channels[1] = other.channels[0].clone();
        let ir = matched_filter(&cap, &r, &cfg).unwrap();
        for c in 0..2 {
            let z = analytic_signal(&cap.channel_f64(c));
            let want = circular_xcorr(&z, &r.samples).unwrap();
            for (a, b) in ir.bins[c].iter().zip(&want) {
                assert!((a - b).norm() < 1e-9 * want[0].norm().max(1.0));
            }
        }
        let p0: Vec<f64> = ir.bins[0].iter().map(|z| z.norm()).collect();
        let p1: Vec<f64> = ir.bins[1].iter().map(|z| z.norm()).collect();
        let arg = |p: &[f64]| (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        assert_eq!(arg(&p0), 250);
        assert_eq!(arg(&p1), 40);
    }

    #[test]
    fn aligned_equals_circular_for_steady_periodic_input() {
        let cfg = short_cfg();
        let r = generate_sweep(&cfg, 0).unwrap();
        let a = capture_from(&cfg, 0, &r.samples, 100);
        let b = capture_from(&cfg, 1, &r.samples, 100);
        let mf = MatchedFilter::new(&cfg, &r).unwrap();
        let circ = mf.circular(&a).unwrap();
        let lin = mf.aligned(&a, &b).unwrap();
        assert!(lin.aligned && !circ.aligned);
        for (x, y) in circ.bins[0].iter().zip(&lin.bins[0]) {
            assert!((x - y).norm() < 1e-9 * circ.bins[0][100].norm());
        }
        assert!(mf.aligned(&a, &a).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let cfg = short_cfg();
        let r = generate_sweep(&cfg, 0).unwrap();
        let mut cap = capture_from(&cfg, 0, &r.samples, 0);
        cap.channels[0].pop();
        cap.channels[1].pop();
        assert!(matches!(matched_filter(&cap, &r, &cfg), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn derotate_removes_bin_phase() {
        let v = Complex64::from_polar(1.0, TAU * 15e6 * 7.0 / 50e6 + 0.3);
        let d = derotate(v, 7, 15e6, 50e6);
        assert!((d.arg() - 0.3).abs() < 1e-12);
    }
}
