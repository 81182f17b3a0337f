//! Multiple linear regression with an unpenalized intercept and optional
//! ridge penalty. Also the readout solver for the echo state network.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Above this many features a ridge fit goes through the normal equations
/// (Cholesky) instead of an orthogonal factorization of the stacked system.
pub const QR_MAX_FEATURES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSpec {
    pub lambda: f64,
}

impl RidgeSpec {
    pub const NONE: RidgeSpec = RidgeSpec { lambda: 0.0 };

    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// `scale * trace(Xc' Xc) / p` on the column-centred design.
    pub fn relative_to_trace(x: &Matrix, scale: f64) -> Self {
        let p = x.cols();
        if p == 0 || x.rows() == 0 {
            return Self::NONE;
        }
        let means = column_means(x);
        let trace: f64 = x
            .iter_rows()
            .map(|r| r.iter().zip(&means).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
            .sum();
        Self {
            lambda: scale * trace / p as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl MlrModel {
    pub fn feature_dim(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + dot(x, &self.beta)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.beta.len() {
            return Err(Error::Dimension {
                expected: self.beta.len(),
                got: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for r in x.iter_rows() {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    let n = x.rows() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Minimize `|y - X b - c|^2 + lambda |b|^2` over `b` and the intercept `c`.
pub fn fit_mlr(x: &Matrix, y: &[f64], ridge: RidgeSpec) -> Result<MlrModel> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("training data contains missing or non-finite values".into()));
    }
    let lambda = RidgeSpec::new(ridge.lambda)?.lambda;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    if p == 0 {
        return Ok(MlrModel { beta: Vec::new(), intercept: y_mean, lambda });
    }
    // The intercept is eliminated by centring, which leaves it unpenalized.
    let x_mean = column_means(x);
    let xc = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let beta = if lambda == 0.0 {
        solve_least_squares(xc, &yc)?
    } else if p <= QR_MAX_FEATURES {
        let mut stacked = DMatrix::zeros(n + p, p);
        stacked.rows_mut(0, n).copy_from(&xc);
        let s = lambda.sqrt();
        for j in 0..p {
            stacked[(n + j, j)] = s;
        }
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&yc);
        solve_least_squares(stacked, &rhs)?
    } else {
        let mut gram = xc.tr_mul(&xc);
        for j in 0..p {
            gram[(j, j)] += lambda;
        }
        let rhs = xc.tr_mul(&yc);
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Numerical("normal equations are not positive definite".into()))?;
        chol.solve(&rhs)
    };
    let beta: Vec<f64> = beta.iter().copied().collect();
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("non-finite regression coefficients".into()));
    }
    let intercept = y_mean - dot(&x_mean, &beta);
    Ok(MlrModel { beta, intercept, lambda })
}

/// Householder QR solve of a full-column-rank least squares problem.
fn solve_least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::Singular { columns: (n..p).collect() });
    }
    let qr = a.qr();
    let r = qr.r();
    let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-10;
    let weak: Vec<usize> = (0..p).filter(|&j| !(r[(j, j)].abs() > tol)).collect();
    if !weak.is_empty() {
        return Err(Error::Singular { columns: weak });
    }
    let qtb = qr.q().tr_mul(b);
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [1.0, 3.0, 5.0, 7.0];
        let m = fit_mlr(&x, &y, RidgeSpec::NONE).unwrap();
        assert!((m.beta[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept - 1.0).abs() < 1e-12);
        for (p, t) in m.predict(&x).unwrap().iter().zip(y) {
            assert!((p - t).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![2.0, 4.0, 0.1],
            vec![3.0, 6.0, 0.7],
            vec![4.0, 8.0, 0.2],
        ])
        .unwrap();
        match fit_mlr(&x, &[1.0, 2.0, 3.0, 4.0], RidgeSpec::NONE) {
            Err(Error::Singular { columns }) => assert_eq!(columns, vec![1]),
            other => panic!("expected singular error, got {other:?}"),
        }
        // a penalty makes the same system solvable
        assert!(fit_mlr(&x, &[1.0, 2.0, 3.0, 4.0], RidgeSpec::new(1e-3).unwrap()).is_ok());
    }

    #[test]
    fn zero_input_gives_intercept() {
        let m = MlrModel { beta: vec![1.5, -2.0], intercept: 0.25, lambda: 0.0 };
        assert_eq!(m.predict(&Matrix::zeros(3, 2)).unwrap(), vec![0.25; 3]);
        assert!(matches!(m.predict(&Matrix::zeros(1, 3)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn wide_ridge_uses_normal_equations() {
        let n = 300;
        let p = QR_MAX_FEATURES + 5;
        let x = Matrix::from_vec(n, p, (0..n * p).map(|k| ((k * 7919) % 1013) as f64 / 1013.0).collect()).unwrap();
        let y: Vec<f64> = (0..n).map(|i| x.row(i)[0] * 3.0 - 1.0).collect();
        let m = fit_mlr(&x, &y, RidgeSpec::new(1e-9).unwrap()).unwrap();
        let r: f64 = m.predict(&x).unwrap().iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(r < 1e-5, "residual {r}");
    }
}
