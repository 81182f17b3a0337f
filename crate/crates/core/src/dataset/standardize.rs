use crate::error::{Error, Result};
use crate::linalg::{mean, sample_std, Matrix};

/// Per-feature z-score parameters estimated on a training segment.
/// Features with zero training variance are dropped from the output.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub input_dim: usize,
    /// Retained input columns, in order.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Estimate parameters column by column, ignoring missing (NaN) entries.
pub fn standardize(train: &Matrix) -> Result<StandardizationParams> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for j in 0..train.cols() {
        let col: Vec<f64> = train.column(j).into_iter().filter(|v| !v.is_nan()).collect();
        if col.is_empty() {
            return Err(Error::Empty(format!("feature {j} is missing on every training row")));
        }
        let s = sample_std(&col);
        if s > 0.0 && s.is_finite() {
            kept.push(j);
            means.push(mean(&col));
            stds.push(s);
        } else {
            dropped.push(j);
        }
    }
    Ok(StandardizationParams {
        input_dim: train.cols(),
        kept,
        dropped,
        mean: means,
        std: stds,
    })
}

impl StandardizationParams {
    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    /// Standardize the retained columns. NaN stays NaN.
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: m.cols(),
            });
        }
        let mut out = Matrix::zeros(m.rows(), self.kept.len());
        for i in 0..m.rows() {
            let src = m.row(i);
            for (k, &j) in self.kept.iter().enumerate() {
                out.set(i, k, (src[j] - self.mean[k]) / self.std[k]);
            }
        }
        Ok(out)
    }

    /// Map standardized columns back to original units (retained columns only).
    pub fn inverse(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.kept.len() {
            return Err(Error::Dimension {
                expected: self.kept.len(),
                got: m.cols(),
            });
        }
        let mut out = m.clone();
        for i in 0..m.rows() {
            for (k, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.std[k] + self.mean[k];
            }
        }
        Ok(out)
    }
}

/// z-score for a single series (the regression target).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarScaler {
    pub mean: f64,
    pub std: f64,
}

impl ScalarScaler {
    pub const IDENTITY: ScalarScaler = ScalarScaler { mean: 0.0, std: 1.0 };

    /// Fit on non-missing values. A constant series keeps unit scale.
    pub fn fit(values: &[f64]) -> Result<Self> {
        let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return Err(Error::Empty("target is missing on every training row".into()));
        }
        let s = sample_std(&v);
        Ok(Self {
            mean: mean(&v),
            std: if s > 0.0 { s } else { 1.0 },
        })
    }

    #[inline]
    pub fn forward(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}
