//! Time-aligned sensor/reference series: loaders for the public archives,
//! a schema-driven generic loader, canonical serialization, temporal
//! splitting, standardization and tapped-delay expansion.
//!
//! Missing entries are stored as NaN; the mask accessors are the only
//! way the rest of the crate asks about missingness.

mod canonical;
mod enea;
mod generic;
mod split;
mod standardize;
mod tabular;
mod tapped;
mod ucsd;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use canonical::{load_canonical, metadata_path, write_canonical};
pub use enea::{load_enea_pirelli, ENEA_MISSING_SENTINEL};
pub use generic::{load_generic_csv, ColumnRole, ColumnSpec, GenericSchema};
pub use split::{split_temporal, SplitSpec, TemporalSplit};
pub use standardize::{standardize, ScalarScaler, StandardizationParams};
pub use tapped::{
    tapped_delay_expand, tapped_delay_rows, TappedDelayConfig, TappedDelayView, TargetPolicy,
};
pub use ucsd::{load_ucsd_mixtures, load_ucsd_mixtures_blocked, UcsdMixture, UCSD_BLOCK};

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl TargetSeries {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }

    /// Observed (min, max) over non-missing values.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub name: String,
    /// Seconds between consecutive rows.
    pub sampling_period: f64,
    /// First timestamp as found in the source, informational only.
    pub start_time: Option<String>,
    channel_names: Vec<String>,
    channel_units: Vec<String>,
    channels: Matrix,
    targets: Vec<TargetSeries>,
}

impl TimeSeriesDataset {
    pub fn new(
        name: impl Into<String>,
        sampling_period: f64,
        channel_names: Vec<String>,
        channel_units: Vec<String>,
        channels: Matrix,
        targets: Vec<TargetSeries>,
    ) -> Result<Self> {
        if !(sampling_period > 0.0 && sampling_period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sampling period must be positive, got {sampling_period}"
            )));
        }
        if channel_names.len() != channels.cols() {
            return Err(Error::Dimension {
                expected: channels.cols(),
                got: channel_names.len(),
            });
        }
        if channel_units.len() != channels.cols() {
            return Err(Error::Dimension {
                expected: channels.cols(),
                got: channel_units.len(),
            });
        }
        for t in &targets {
            if t.values.len() != channels.rows() {
                return Err(Error::Structure(format!(
                    "target {} has {} samples but channels have {}",
                    t.name,
                    t.values.len(),
                    channels.rows()
                )));
            }
        }
        let mut names: Vec<&str> = channel_names
            .iter()
            .map(String::as_str)
            .chain(targets.iter().map(|t| t.name.as_str()))
            .collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("duplicate column name {}", w[0])));
        }
        Ok(Self {
            name: name.into(),
            sampling_period,
            start_time: None,
            channel_names,
            channel_units,
            channels,
            targets,
        })
    }

    pub fn with_start_time(mut self, start: Option<String>) -> Self {
        self.start_time = start;
        self
    }

    pub fn len(&self) -> usize {
        self.channels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.cols()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channel_units(&self) -> &[String] {
        &self.channel_units
    }

    /// Sensor readings `[T x d]`, NaN where missing.
    pub fn channels(&self) -> &Matrix {
        &self.channels
    }

    pub fn targets(&self) -> &[TargetSeries] {
        &self.targets
    }

    pub fn target(&self, name: &str) -> Result<&TargetSeries> {
        self.targets
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::Schema(format!(
                    "unknown target {name}; available: {}",
                    self.targets
                        .iter()
                        .map(|t| t.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }

    /// Missingness of column `col`, where columns are the `d` channels
    /// followed by the targets.
    pub fn is_missing(&self, t: usize, col: usize) -> bool {
        let d = self.n_channels();
        if col < d {
            self.channels.get(t, col).is_nan()
        } else {
            self.targets[col - d].values[t].is_nan()
        }
    }

    /// Row-major boolean mask `[T x (d + #targets)]`.
    pub fn missing_mask(&self) -> Vec<bool> {
        let width = self.n_channels() + self.targets.len();
        let mut mask = Vec::with_capacity(self.len() * width);
        for t in 0..self.len() {
            mask.extend((0..width).map(|c| self.is_missing(t, c)));
        }
        mask
    }

    pub fn segment(&self, range: Range<usize>) -> TimeSeriesDataset {
        TimeSeriesDataset {
            name: self.name.clone(),
            sampling_period: self.sampling_period,
            start_time: None,
            channel_names: self.channel_names.clone(),
            channel_units: self.channel_units.clone(),
            channels: self.channels.slice_rows(range.start, range.end),
            targets: self
                .targets
                .iter()
                .map(|t| TargetSeries {
                    name: t.name.clone(),
                    unit: t.unit.clone(),
                    values: t.values[range.clone()].to_vec(),
                })
                .collect(),
        }
    }

    /// Keep only the named channels, in the given order.
    pub fn select_channels(&self, names: &[String]) -> Result<TimeSeriesDataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.channel_names
                    .iter()
                    .position(|c| c.eq_ignore_ascii_case(n))
                    .ok_or_else(|| Error::Schema(format!("unknown channel {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.channels = self.channels.select_columns(&idx);
        out.channel_names = idx.iter().map(|&i| self.channel_names[i].clone()).collect();
        out.channel_units = idx.iter().map(|&i| self.channel_units[i].clone()).collect();
        Ok(out)
    }

    /// Remove the rows whose `target` value is missing. The result is
    /// indexed by row, no longer by a uniform clock; returns the number of
    /// rows removed.
    pub fn drop_rows_missing_target(&self, target: &str) -> Result<(TimeSeriesDataset, usize)> {
        let values = &self.target(target)?.values;
        let keep: Vec<usize> = (0..self.len()).filter(|&t| !values[t].is_nan()).collect();
        let removed = self.len() - keep.len();
        let mut out = self.clone();
        out.channels = self.channels.select_rows(&keep);
        for t in &mut out.targets {
            t.values = keep.iter().map(|&i| t.values[i]).collect();
        }
        Ok((out, removed))
    }
}

/// Assign each parsed timestamp a slot on a uniform clock of spacing
/// `period`. Gaps that are whole multiples of the period become masked
/// rows; anything else is a structural error.
pub(crate) fn regular_slots(times: &[f64], period: f64, lines: &[usize]) -> Result<Vec<usize>> {
    let mut slots = Vec::with_capacity(times.len());
    let Some(&t0) = times.first() else {
        return Ok(slots);
    };
    slots.push(0);
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        if dt == 0.0 {
            return Err(Error::Structure(format!(
                "duplicate timestamp at line {}",
                lines[i]
            )));
        }
        if dt < 0.0 {
            return Err(Error::Structure(format!(
                "non-monotonic timestamp at line {}",
                lines[i]
            )));
        }
        let k = ((times[i] - t0) / period).round();
        let off = (times[i] - t0) - k * period;
        if off.abs() > 1e-6 * period.max(1.0) || k as usize <= slots[i - 1] {
            return Err(Error::Structure(format!(
                "timestamp at line {} is off the {period} s sampling grid",
                lines[i]
            )));
        }
        slots.push(k as usize);
    }
    Ok(slots)
}

/// Scatter row values onto their slots, filling gap rows with NaN.
pub(crate) fn scatter_rows(rows: Vec<Vec<f64>>, slots: &[usize], width: usize) -> Vec<Vec<f64>> {
    let total = slots.last().map_or(0, |&s| s + 1);
    let mut out = vec![vec![f64::NAN; width]; total];
    for (row, &s) in rows.into_iter().zip(slots) {
        out[s] = row;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TimeSeriesDataset {
        let ch = Matrix::from_rows(&[vec![1.0, f64::NAN], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        TimeSeriesDataset::new(
            "tiny",
            60.0,
            vec!["a".into(), "b".into()],
            vec!["u".into(), "u".into()],
            ch,
            vec![TargetSeries::new("co", "ppm", vec![0.5, f64::NAN, 1.5])],
        )
        .unwrap()
    }

    #[test]
    fn mask_covers_channels_then_targets() {
        let ds = tiny();
        assert_eq!(
            ds.missing_mask(),
            vec![false, true, false, false, false, true, false, false, false]
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        let ch = Matrix::zeros(3, 1);
        let err = TimeSeriesDataset::new(
            "x",
            1.0,
            vec!["a".into()],
            vec!["u".into()],
            ch,
            vec![TargetSeries::new("y", "u", vec![0.0; 2])],
        );
        assert!(matches!(err, Err(Error::Structure(_))));
    }

    #[test]
    fn drop_missing_target_compacts_rows() {
        let (ds, removed) = tiny().drop_rows_missing_target("CO").unwrap();
        assert_eq!(removed, 1);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.channels().row(1), &[4.0, 5.0]);
    }

    #[test]
    fn slots_fill_whole_gaps_and_reject_others() {
        let s = regular_slots(&[0.0, 10.0, 30.0], 10.0, &[1, 2, 3]).unwrap();
        assert_eq!(s, vec![0, 1, 3]);
        assert!(matches!(
            regular_slots(&[0.0, 10.0, 10.0], 10.0, &[1, 2, 3]),
            Err(Error::Structure(m)) if m.contains("duplicate")
        ));
        assert!(regular_slots(&[0.0, 10.0, 5.0], 10.0, &[1, 2, 3]).is_err());
        assert!(regular_slots(&[0.0, 15.0], 10.0, &[1, 2]).is_err());
    }
}
