//! Tapped-delay (sliding window) expansion: row `t` of the view holds the
//! sensor vectors at `t-L+1 ..= t`, oldest first, paired with the target at `t`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TappedDelayConfig {
    taps: usize,
}

impl TappedDelayConfig {
    pub const STATIC: TappedDelayConfig = TappedDelayConfig { taps: 1 };

    pub fn new(taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::InvalidParameter("tapped delay needs at least one tap".into()));
        }
        Ok(Self { taps })
    }

    /// Window length in samples for a window of `seconds` on a clock of
    /// `period` seconds. Durations within 5% of a whole number of samples
    /// are rounded (e.g. 0.33 min at 20 s gives one tap).
    pub fn from_duration(seconds: f64, period: f64) -> Result<Self> {
        let ratio = seconds / period;
        let taps = ratio.round();
        if !(taps >= 1.0) || (ratio - taps).abs() > 0.05 * taps {
            return Err(Error::InvalidParameter(format!(
                "window of {seconds} s is not a whole number of {period} s samples"
            )));
        }
        Self::new(taps as usize)
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn window_duration(&self, period: f64) -> f64 {
        self.taps as f64 * period
    }
}

/// What to do with rows whose target is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetPolicy {
    /// Exclude them (training pairs).
    Require,
    /// Keep them with a NaN target (prediction over a time span).
    Allow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TappedDelayView {
    /// `[T' x L*d]`
    pub features: Matrix,
    pub targets: Vec<f64>,
    /// Time index (into the source series) of each row.
    pub times: Vec<usize>,
    pub taps: usize,
    /// Rows dropped because the window has no full history.
    pub boundary_dropped: usize,
    /// Rows dropped for a missing sensor value in the window or a missing target.
    pub excluded: usize,
}

impl TappedDelayView {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Expand a whole segment: the first `L-1` rows are dropped, as is any row
/// whose window touches a missing sensor value or whose target is missing.
pub fn tapped_delay_expand(
    channels: &Matrix,
    targets: &[f64],
    cfg: TappedDelayConfig,
) -> Result<TappedDelayView> {
    if channels.rows() < cfg.taps {
        return Err(Error::InvalidParameter(format!(
            "segment of {} samples is shorter than the {}-tap window",
            channels.rows(),
            cfg.taps
        )));
    }
    tapped_delay_rows(channels, targets, cfg, 0..channels.rows(), TargetPolicy::Require)
}

/// Expand the rows whose time index lies in `range`, letting windows reach
/// back before `range.start` into earlier samples of the same series.
pub fn tapped_delay_rows(
    channels: &Matrix,
    targets: &[f64],
    cfg: TappedDelayConfig,
    range: Range<usize>,
    policy: TargetPolicy,
) -> Result<TappedDelayView> {
    if targets.len() != channels.rows() {
        return Err(Error::Dimension {
            expected: channels.rows(),
            got: targets.len(),
        });
    }
    if range.end > channels.rows() {
        return Err(Error::InvalidParameter("row range exceeds series length".into()));
    }
    let l = cfg.taps;
    let d = channels.cols();
    // bad[t] = a sensor value at t is missing
    let bad: Vec<bool> = (0..channels.rows())
        .map(|t| channels.row(t).iter().any(|v| v.is_nan()))
        .collect();
    let mut data = Vec::with_capacity(range.len() * l * d);
    let mut out_targets = Vec::with_capacity(range.len());
    let mut times = Vec::with_capacity(range.len());
    let mut boundary = 0;
    let mut excluded = 0;
    // number of consecutive clean samples ending at t
    let mut run = 0usize;
    let first = range.start.saturating_sub(l - 1);
    for t in first..range.end {
        run = if bad[t] { 0 } else { run + 1 };
        if t < range.start {
            continue;
        }
        if t + 1 < l {
            boundary += 1;
            continue;
        }
        let y = targets[t];
        if run < l || (policy == TargetPolicy::Require && y.is_nan()) {
            excluded += 1;
            continue;
        }
        for s in t + 1 - l..=t {
            data.extend_from_slice(channels.row(s));
        }
        out_targets.push(y);
        times.push(t);
    }
    Ok(TappedDelayView {
        features: Matrix::from_vec(out_targets.len(), l * d, data)?,
        targets: out_targets,
        times,
        taps: l,
        boundary_dropped: boundary,
        excluded,
    })
}
