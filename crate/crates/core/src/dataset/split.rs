use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::error::{Error, Result};

/// Contiguous train -> validation -> test partition lengths, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    pub fn new(train_len: usize, val_len: usize, test_len: usize) -> Self {
        Self {
            train_len,
            val_len,
            test_len,
        }
    }

    pub fn total(&self) -> usize {
        self.train_len + self.val_len + self.test_len
    }

    /// Index ranges inside a series of length `len`, starting at sample 0.
    pub fn ranges(&self, len: usize) -> Result<TemporalSplit> {
        if self.total() > len {
            return Err(Error::InvalidParameter(format!(
                "split {self} needs {} samples, series has {len}",
                self.total()
            )));
        }
        let a = self.train_len;
        let b = a + self.val_len;
        let c = b + self.test_len;
        Ok(TemporalSplit {
            train: 0..a,
            val: a..b,
            test: b..c,
        })
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.train_len, self.val_len, self.test_len)
    }
}

impl FromStr for SplitSpec {
    type Err = Error;

    /// `504-168-7002` or `504:168:7002`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(|c| c == '-' || c == ':').map(str::trim).collect();
        let bad = || Error::Config(format!("split {s:?} is not train-val-test"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n = |p: &str| p.parse::<usize>().map_err(|_| bad());
        Ok(SplitSpec::new(n(parts[0])?, n(parts[1])?, n(parts[2])?))
    }
}

/// Split a dataset into its train, validation and test segments, in time order.
pub fn split_temporal(
    ds: &TimeSeriesDataset,
    spec: SplitSpec,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset, TimeSeriesDataset)> {
    let r = spec.ranges(ds.len())?;
    Ok((ds.segment(r.train), ds.segment(r.val), ds.segment(r.test)))
}
