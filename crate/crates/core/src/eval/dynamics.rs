//! Error against the rate of concentration change, and step-response timing.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    /// Equal-count bins over the observed |derivative| values.
    Quantile(usize),
    /// Explicit ascending edges; values outside are clamped into the end bins.
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Quantile(10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBinReport {
    /// `bins + 1` edges over |dC/dt| in target units per second.
    pub edges: Vec<f64>,
    pub mae: Vec<f64>,
    pub counts: Vec<usize>,
    /// Evaluated rows with no forward difference (series end or missing next value).
    pub n_boundary: usize,
}

impl DerivativeBinReport {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Count-weighted mean of the per-bin errors.
    pub fn pooled_mae(&self) -> f64 {
        let n: usize = self.counts.iter().sum();
        self.mae.iter().zip(&self.counts).map(|(m, &c)| m * c as f64).sum::<f64>() / n as f64
    }
}

fn quantile_edges(sorted: &[f64], bins: usize) -> Vec<f64> {
    let m = sorted.len();
    let mut edges = vec![sorted[0]];
    for k in 1..bins {
        let v = sorted[(k * m) / bins];
        if v > *edges.last().expect("non-empty") {
            edges.push(v);
        }
    }
    let last = sorted[m - 1];
    if last > *edges.last().expect("non-empty") || edges.len() == 1 {
        edges.push(last);
    }
    edges
}

/// Index of the bin holding `v`: `[e_i, e_{i+1})`, last bin closed.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    let k = edges[1..bins].partition_point(|e| *e <= v);
    k.min(bins - 1)
}

/// Forward difference of the target divided by the sampling period.
pub fn derivative_binned_mae(
    predictions: &[f64],
    targets: &[f64],
    sampling_period: f64,
    bins: &BinSpec,
) -> Result<DerivativeBinReport> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension { expected: targets.len(), got: predictions.len() });
    }
    if !(sampling_period > 0.0) {
        return Err(Error::InvalidParameter("sampling period must be positive".into()));
    }
    let n = targets.len();
    let mut rows = Vec::new();
    let mut n_boundary = 0;
    for t in 0..n {
        if !(predictions[t].is_finite() && targets[t].is_finite()) {
            continue;
        }
        if t + 1 < n && targets[t + 1].is_finite() {
            let d = ((targets[t + 1] - targets[t]) / sampling_period).abs();
            rows.push((d, (predictions[t] - targets[t]).abs()));
        } else {
            n_boundary += 1;
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no rows with a defined derivative".into()));
    }
    let edges = match bins {
        BinSpec::Quantile(b) => {
            if *b == 0 {
                return Err(Error::InvalidParameter("at least one bin is required".into()));
            }
            let mut d: Vec<f64> = rows.iter().map(|r| r.0).collect();
            d.sort_by(f64::total_cmp);
            quantile_edges(&d, *b)
        }
        BinSpec::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidParameter("bin edges must be strictly ascending with at least two".into()));
            }
            e.clone()
        }
    };
    let nb = edges.len() - 1;
    let mut sum = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for (d, e) in rows {
        let k = bin_index(&edges, d);
        sum[k] += e;
        counts[k] += 1;
    }
    let mae = sum.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    Ok(DerivativeBinReport { edges, mae, counts, n_boundary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientEvent {
    /// Sample index of the first post-step sample.
    pub index: usize,
    /// Seconds from the start of the series.
    pub time: f64,
    pub from: f64,
    pub to: f64,
    pub magnitude: f64,
    /// Seconds until the estimate stays past 90% of the step; `None` if never.
    pub t90: Option<f64>,
    pub t90_comparison: Option<f64>,
    /// Largest excursion beyond the new level before the next event, as a
    /// fraction of the step.
    pub overshoot: f64,
    pub overshoot_comparison: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransientReport {
    pub events: Vec<TransientEvent>,
}

/// Samples the estimate must stay past the 90% level.
pub const T90_HOLD: usize = 3;

/// Set-point changes of at least `threshold`. Consecutive same-direction
/// jumps merge into one event.
pub fn detect_steps(targets: &[f64], threshold: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    let mut t = 1;
    while t < targets.len() {
        let (a, b) = (targets[t - 1], targets[t]);
        if a.is_finite() && b.is_finite() && (b - a).abs() >= threshold && (b - a).abs() > 0.0 {
            let dir = (b - a).signum();
            let mut end = t;
            while end + 1 < targets.len()
                && targets[end + 1].is_finite()
                && ((targets[end + 1] - targets[end]) * dir) >= threshold
            {
                end += 1;
            }
            out.push((t, end, a, targets[end]));
            t = end + 1;
        } else {
            t += 1;
        }
    }
    out
}

fn crossing(est: &[f64], start: usize, stop: usize, level: f64, dir: f64) -> Option<usize> {
    let past = |k: usize| est[k].is_finite() && (est[k] - level) * dir >= 0.0;
    (start..stop).find(|&k| {
        let hold_end = (k + T90_HOLD).min(stop);
        (k..hold_end).all(past)
    })
}

fn overshoot(est: &[f64], start: usize, stop: usize, to: f64, dir: f64, mag: f64) -> f64 {
    est[start..stop]
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v - to) * dir / mag)
        .fold(0.0, f64::max)
}

pub fn transient_response(
    predictions: &[f64],
    targets: &[f64],
    threshold: f64,
    sampling_period: f64,
    comparison: Option<&[f64]>,
) -> Result<TransientReport> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension { expected: targets.len(), got: predictions.len() });
    }
    if let Some(c) = comparison {
        if c.len() != targets.len() {
            return Err(Error::Dimension { expected: targets.len(), got: c.len() });
        }
    }
    if !(threshold > 0.0 && sampling_period > 0.0) {
        return Err(Error::InvalidParameter("threshold and sampling period must be positive".into()));
    }
    let steps = detect_steps(targets, threshold);
    let mut events = Vec::with_capacity(steps.len());
    for (e, &(start, _end, from, to)) in steps.iter().enumerate() {
        let stop = steps.get(e + 1).map_or(targets.len(), |s| s.0);
        let dir = (to - from).signum();
        let mag = (to - from).abs();
        let level = from + 0.9 * (to - from);
        let t_of = |k: Option<usize>| k.map(|k| (k - start) as f64 * sampling_period);
        events.push(TransientEvent {
            index: start,
            time: start as f64 * sampling_period,
            from,
            to,
            magnitude: mag,
            t90: t_of(crossing(predictions, start, stop, level, dir)),
            t90_comparison: comparison.and_then(|c| t_of(crossing(c, start, stop, level, dir))),
            overshoot: overshoot(predictions, start, stop, to, dir, mag),
            overshoot_comparison: comparison.map(|c| overshoot(c, start, stop, to, dir, mag)),
        });
    }
    Ok(TransientReport { events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_single_bin() {
        let y = vec![3.0; 20];
        let p: Vec<f64> = (0..20).map(|i| 3.0 + (i % 3) as f64).collect();
        let r = derivative_binned_mae(&p, &y, 1.0, &BinSpec::default()).unwrap();
        assert_eq!(r.n_bins(), 1);
        assert_eq!(r.counts, vec![19]);
        assert_eq!(r.edges, vec![0.0, 0.0]);
        assert_eq!(r.n_boundary, 1);
    }

    #[test]
    fn ramp_lands_in_one_bin() {
        let y: Vec<f64> = (0..50).map(|i| 0.5 * i as f64 * 10.0).collect();
        let r = derivative_binned_mae(&y, &y, 10.0, &BinSpec::Quantile(5)).unwrap();
        assert_eq!(r.counts, vec![49]);
        let k = bin_index(&r.edges, 0.5);
        assert_eq!(k, 0);
        assert!(r.edges[0] <= 0.5 && 0.5 <= r.edges[1]);
    }

    #[test]
    fn pooled_error_matches_total() {
        let y: Vec<f64> = (0..200).map(|i| ((i as f64) * 0.37).sin() * 5.0).collect();
        let p: Vec<f64> = (0..200).map(|i| if i == 0 { y[0] } else { y[i - 1] }).collect();
        let r = derivative_binned_mae(&p, &y, 2.0, &BinSpec::default()).unwrap();
        let total = (0..199).map(|i| (p[i] - y[i]).abs()).sum::<f64>() / 199.0;
        assert!((r.pooled_mae() - total).abs() < 1e-12);
    }

    #[test]
    fn identical_estimate_has_zero_t90() {
        let y: Vec<f64> = (0..40).map(|i| if (i / 10) % 2 == 0 { 0.0 } else { 10.0 }).collect();
        let r = transient_response(&y, &y, 5.0, 1.0, None).unwrap();
        assert_eq!(r.events.len(), 3);
        for e in &r.events {
            assert_eq!(e.t90, Some(0.0));
            assert_eq!(e.overshoot, 0.0);
        }
    }

    #[test]
    fn no_steps_is_empty() {
        let y = vec![1.0; 10];
        assert!(transient_response(&y, &y, 0.5, 1.0, None).unwrap().events.is_empty());
    }
}
