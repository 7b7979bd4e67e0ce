//! Delay drift per repeater and relative movement of spans.

use serde::{Deserialize, Serialize};

use crate::dsp::{ObservationFlags, RepeaterObservation};
use crate::error::{Error, Result};

/// Fewest common samples a movement report accepts.
pub const MIN_MOVEMENT_SAMPLES: usize = 32;

/// Round-trip delay estimates of one repeater.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelaySeries {
    pub repeater: usize,
    pub sweep_indices: Vec<u64>,
    /// s.
    pub times: Vec<f64>,
    /// s.
    pub delays: Vec<f64>,
}

impl DelaySeries {
    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Delay change relative to the first sample, ns.
    pub fn relative_ns(&self) -> Vec<f64> {
        let d0 = self.delays.first().copied().unwrap_or(0.0);
        self.delays.iter().map(|d| (d - d0) * 1e9).collect()
    }
}

/// Delay estimates of repeater `k` from every aligned record that found a
/// peak, ordered by sweep.
pub fn delay_series(observations: &[RepeaterObservation], k: usize) -> DelaySeries {
    let mut recs: Vec<&RepeaterObservation> = observations
        .iter()
        .filter(|o| {
            o.repeater == k
                && !o.flags.contains(ObservationFlags::MISSING)
                && !o.flags.contains(ObservationFlags::EDGE)
                && !o.flags.contains(ObservationFlags::UNALIGNED)
        })
        .collect();
    recs.sort_by_key(|o| o.sweep_index);
    recs.dedup_by_key(|o| o.sweep_index);
    DelaySeries {
        repeater: k,
        sweep_indices: recs.iter().map(|o| o.sweep_index).collect(),
        times: recs.iter().map(|o| o.timestamp).collect(),
        delays: recs.iter().map(|o| o.delay_est).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovementConfig {
    /// Use only the last `window` common samples; `None` uses all.
    pub window: Option<usize>,
    /// Adjacent spans correlated below this are flagged.
    pub flag_below: f64,
}

impl Default for MovementConfig {
    fn default() -> Self {
        MovementConfig {
            window: None,
            flag_below: -0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanMovement {
    /// Span `k` lies between repeaters `k − 1` and `k` (repeater 0 is the
    /// terminal).
    pub span: usize,
    /// Round-trip differential delay change `d_k − d_{k−1}` from the first
    /// common sample, ns.
    pub movement_ns: Vec<f64>,
    /// Mean of the last tenth minus mean of the first tenth, ns.
    pub net_ns: f64,
    pub peak_to_peak_ns: f64,
    /// Standard deviation of first differences over √2: white-noise level
    /// of one sample, ns.
    pub noise_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacentFlag {
    pub spans: (usize, usize),
    pub correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovementReport {
    pub repeaters: Vec<usize>,
    pub sweep_indices: Vec<u64>,
    pub times: Vec<f64>,
    pub spans: Vec<SpanMovement>,
    /// Pearson correlation between repeater delay series.
    pub repeater_correlation: Vec<Vec<f64>>,
    /// Pearson correlation between span differential series.
    pub span_correlation: Vec<Vec<f64>>,
    /// Adjacent spans moving in opposite directions: one stretches while the
    /// other contracts, as when the repeater between them moves.
    pub flagged: Vec<AdjacentFlag>,
}

/// Pearson correlation; 0 when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Series (ns) with a spread below this are treated as constant, so that
/// rounding residue never produces a correlation.
const STILL_NS: f64 = 1e-6;

fn correlation_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = rows.len();
    let still: Vec<bool> = rows
        .iter()
        .map(|r| {
            let m = mean(r);
            (r.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / r.len() as f64).sqrt() < STILL_NS
        })
        .collect();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let c = if i == j {
                1.0
            } else if still[i] || still[j] {
                0.0
            } else {
                pearson(&rows[i], &rows[j])
            };
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sweep indices present in every series.
fn common_indices(series: &[DelaySeries]) -> Vec<u64> {
    let mut common = series[0].sweep_indices.clone();
    for s in &series[1..] {
        let mut keep = Vec::with_capacity(common.len());
        let (mut a, mut b) = (0, 0);
        while a < common.len() && b < s.sweep_indices.len() {
            match common[a].cmp(&s.sweep_indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    keep.push(common[a]);
                    a += 1;
                    b += 1;
                }
            }
        }
        common = keep;
    }
    common
}

/// Per-span movement and correlation report. `series` is ordered by
/// repeater, nearest first.
pub fn span_movement_report(series: &[DelaySeries], cfg: &MovementConfig) -> Result<MovementReport> {
    if series.is_empty() {
        return Err(Error::InsufficientSamples {
            needed: MIN_MOVEMENT_SAMPLES,
            got: 0,
        });
    }
    let mut idx = common_indices(series);
    if let Some(w) = cfg.window {
        if idx.len() > w {
            idx.drain(..idx.len() - w);
        }
    }
    if idx.len() < MIN_MOVEMENT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_MOVEMENT_SAMPLES,
            got: idx.len(),
        });
    }
    let pick = |s: &DelaySeries| -> (Vec<f64>, Vec<f64>) {
        let mut d = Vec::with_capacity(idx.len());
        let mut t = Vec::with_capacity(idx.len());
        let mut j = 0;
        for &m in &idx {
            while s.sweep_indices[j] != m {
                j += 1;
            }
            d.push(s.delays[j]);
            t.push(s.times[j]);
        }
        (d, t)
    };
    let picked: Vec<(Vec<f64>, Vec<f64>)> = series.iter().map(pick).collect();
    let delays_ns: Vec<Vec<f64>> = picked
        .iter()
        .map(|(d, _)| d.iter().map(|x| (x - d[0]) * 1e9).collect())
        .collect();
    let n = idx.len();
    let tenth = (n / 10).max(1);
    let spans: Vec<SpanMovement> = (0..series.len())
        .map(|i| {
            let mv: Vec<f64> = if i == 0 {
                delays_ns[0].clone()
            } else {
                delays_ns[i].iter().zip(&delays_ns[i - 1]).map(|(a, b)| a - b).collect()
            };
            let diffs: Vec<f64> = mv.windows(2).map(|w| w[1] - w[0]).collect();
            let md = mean(&diffs);
            let noise = (diffs.iter().map(|d| (d - md) * (d - md)).sum::<f64>() / diffs.len() as f64 / 2.0).sqrt();
            let (lo, hi) = mv.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            SpanMovement {
                span: series[i].repeater,
                net_ns: mean(&mv[n - tenth..]) - mean(&mv[..tenth]),
                peak_to_peak_ns: hi - lo,
                noise_ns: noise,
                movement_ns: mv,
            }
        })
        .collect();
    let span_rows: Vec<Vec<f64>> = spans.iter().map(|s| s.movement_ns.clone()).collect();
    let span_correlation = correlation_matrix(&span_rows);
    let flagged = (1..spans.len())
        .filter(|&i| span_correlation[i - 1][i] < cfg.flag_below)
        .map(|i| AdjacentFlag {
            spans: (spans[i - 1].span, spans[i].span),
            correlation: span_correlation[i - 1][i],
        })
        .collect();
    Ok(MovementReport {
        repeaters: series.iter().map(|s| s.repeater).collect(),
        times: picked[0].1.clone(),
        sweep_indices: idx,
        repeater_correlation: correlation_matrix(&delays_ns),
        span_correlation,
        spans,
        flagged,
    })
}
