use std::collections::VecDeque;

use num_complex::Complex64;

use super::matched_filter::ImpulseResponse;
use crate::error::{Error, Result};

fn check(irs: &[ImpulseResponse], w: usize) -> Result<()> {
    if w == 0 || irs.len() < w {
        return Err(Error::InsufficientSamples {
            needed: w.max(1),
            got: irs.len(),
        });
    }
    let first = &irs[0];
    for ir in &irs[..w] {
        if ir.launch_pol != first.launch_pol {
            return Err(Error::MixedPolarization);
        }
        if ir.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                actual: ir.len(),
            });
        }
    }
    Ok(())
}

/// Complex mean of the first `w` responses, all of one launch
/// polarization. Metadata follows the last response averaged.
pub fn coherent_average(irs: &[ImpulseResponse], w: usize) -> Result<ImpulseResponse> {
    check(irs, w)?;
    let mut out = irs[w - 1].clone();
    if w == 1 {
        return Ok(out);
    }
    let scale = 1.0 / w as f64;
    for c in 0..2 {
        let acc = &mut out.bins[c];
        acc.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for ir in &irs[..w] {
            for (a, v) in acc.iter_mut().zip(&ir.bins[c]) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|z| *z *= scale);
    }
    out.averaged = irs[..w].iter().map(|ir| ir.averaged).sum();
    out.aligned = irs[..w].iter().all(|ir| ir.aligned);
    Ok(out)
}

/// Mean of `|X|² + |Y|²` over the first `w` responses (incoherent
/// averaging: phase is discarded, noise variance rather than level drops).
pub fn power_average(irs: &[ImpulseResponse], w: usize) -> Result<Vec<f64>> {
    check(irs, w)?;
    let mut acc = vec![0.0; irs[0].len()];
    for ir in &irs[..w] {
        for (a, p) in acc.iter_mut().zip(ir.power()) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|v| *v /= w as f64);
    Ok(acc)
}

/// Running complex mean over the most recent `w` responses.
#[derive(Clone, Debug)]
pub struct SlidingAverage {
    w: usize,
    window: VecDeque<ImpulseResponse>,
    sum: [Vec<Complex64>; 2],
    pushes: u64,
}

impl SlidingAverage {
    pub fn new(w: usize) -> Self {
        SlidingAverage {
            w: w.max(1),
            window: VecDeque::new(),
            sum: [Vec::new(), Vec::new()],
            pushes: 0,
        }
    }

    pub fn clear(&mut self) {
        self.window.clear();
        self.sum = [Vec::new(), Vec::new()];
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Adds `ir` and returns the mean of the window (up to `w` responses).
    pub fn push(&mut self, ir: ImpulseResponse) -> Result<ImpulseResponse> {
        if self.w == 1 {
            return Ok(ir);
        }
        if let Some(first) = self.window.front() {
            if first.launch_pol != ir.launch_pol {
                return Err(Error::MixedPolarization);
            }
            if first.len() != ir.len() {
                self.clear();
            }
        }
        if self.sum[0].len() != ir.len() {
            self.sum = [vec![Complex64::new(0.0, 0.0); ir.len()], vec![Complex64::new(0.0, 0.0); ir.len()]];
        }
        for c in 0..2 {
            for (s, v) in self.sum[c].iter_mut().zip(&ir.bins[c]) {
                *s += v;
            }
        }
        self.window.push_back(ir);
        if self.window.len() > self.w {
            let old = self.window.pop_front().expect("non-empty");
            for c in 0..2 {
                for (s, v) in self.sum[c].iter_mut().zip(&old.bins[c]) {
                    *s -= v;
                }
            }
        }
        self.pushes += 1;
        if self.pushes % 4096 == 0 {
            // bound accumulated rounding from the running sum
            for c in 0..2 {
                self.sum[c].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for ir in &self.window {
                    for (s, v) in self.sum[c].iter_mut().zip(&ir.bins[c]) {
                        *s += v;
                    }
                }
            }
        }
        let count = self.window.len();
        let last = self.window.back().expect("non-empty");
        let scale = 1.0 / count as f64;
        let mut out = last.clone_meta();
        out.bins = [
            self.sum[0].iter().map(|z| z * scale).collect(),
            self.sum[1].iter().map(|z| z * scale).collect(),
        ];
        out.averaged = self.window.iter().map(|ir| ir.averaged).sum();
        out.aligned = self.window.iter().all(|ir| ir.aligned);
        Ok(out)
    }
}

impl ImpulseResponse {
    fn clone_meta(&self) -> ImpulseResponse {
        ImpulseResponse {
            sweep_index: self.sweep_index,
            launch_pol: self.launch_pol,
            timestamp_ns: self.timestamp_ns,
            sample_rate: self.sample_rate,
            sweep_bandwidth: self.sweep_bandwidth,
            bins: [Vec::new(), Vec::new()],
            averaged: self.averaged,
            aligned: self.aligned,
        }
    }
}
