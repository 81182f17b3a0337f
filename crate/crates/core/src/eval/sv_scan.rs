use crate::error::{Error, Result};

/// One SVR grid point with its support-vector count and errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SvScanRow {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub n_sv: usize,
    pub val_mae: f64,
    pub test_mae: f64,
}

/// Scatter rows ordered by `(C, gamma, epsilon)`.
pub fn sv_tradeoff_scan(rows: &[SvScanRow]) -> Result<Vec<SvScanRow>> {
    if rows.is_empty() {
        return Err(Error::Empty("SVR grid has no completed trials".into()));
    }
    let mut out = rows.to_vec();
    out.sort_by(|a, b| {
        a.c.total_cmp(&b.c).then(a.gamma.total_cmp(&b.gamma)).then(a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(out)
}

pub const SV_SCAN_HEADER: &str = "c,gamma,epsilon,n_sv,val_mae,test_mae";
