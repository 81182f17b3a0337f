use crate::error::{Error, Result};

/// Absolute-error summary. `std_abs_err` uses the sample (n-1) convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaeReport {
    pub mae: f64,
    pub std_abs_err: f64,
    /// `mae / range`; NaN when the range is not positive.
    pub relative_mae: f64,
    pub n_evaluated: usize,
    pub n_skipped: usize,
}

pub const STD_CONVENTION: &str = "sample standard deviation of absolute errors (n-1)";

/// Rows are skipped when `mask[i]` is set or either value is missing.
pub fn compute_mae(predictions: &[f64], targets: &[f64], mask: Option<&[bool]>, range: f64) -> Result<MaeReport> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension { expected: targets.len(), got: predictions.len() });
    }
    if let Some(m) = mask {
        if m.len() != targets.len() {
            return Err(Error::Dimension { expected: targets.len(), got: m.len() });
        }
    }
    let errs: Vec<f64> = (0..targets.len())
        .filter(|&i| !mask.map_or(false, |m| m[i]) && predictions[i].is_finite() && targets[i].is_finite())
        .map(|i| (predictions[i] - targets[i]).abs())
        .collect();
    if errs.is_empty() {
        return Err(Error::Empty("no evaluable rows".into()));
    }
    let n = errs.len();
    let mae = errs.iter().sum::<f64>() / n as f64;
    let std_abs_err = if n > 1 {
        (errs.iter().map(|e| (e - mae) * (e - mae)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MaeReport {
        mae,
        std_abs_err,
        relative_mae: if range > 0.0 { mae / range } else { f64::NAN },
        n_evaluated: n,
        n_skipped: targets.len() - n,
    })
}

/// Observed `max - min` over the finite values.
pub fn observed_range(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo <= hi {
        hi - lo
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = compute_mae(&[1.0, 2.0], &[1.0, 2.0], None, 1.0).unwrap();
        assert_eq!((r.mae, r.std_abs_err), (0.0, 0.0));
    }

    #[test]
    fn hand_arithmetic() {
        let r = compute_mae(&[1.0, 3.0], &[0.0, 0.0], None, 4.0).unwrap();
        assert_eq!(r.mae, 2.0);
        assert!((r.std_abs_err - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.relative_mae, 0.5);
    }

    #[test]
    fn relative_error_example() {
        let r = compute_mae(&[1.05], &[0.0], None, 48.50 - 0.30).unwrap();
        assert!((r.relative_mae - 0.0218).abs() < 1e-3);
    }

    #[test]
    fn masked_and_missing_rows_are_skipped() {
        let r = compute_mae(&[1.0, f64::NAN, 5.0, 2.0], &[0.0, 1.0, 0.0, f64::NAN], Some(&[false, false, true, false]), 1.0)
            .unwrap();
        assert_eq!((r.n_evaluated, r.n_skipped, r.mae), (1, 3, 1.0));
        assert!(compute_mae(&[f64::NAN], &[1.0], None, 1.0).is_err());
    }
}
