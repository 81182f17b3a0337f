//! Single-hidden-layer tanh network trained by full-batch gradient descent.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    /// Hidden weights, `hidden x input_dim` row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn random(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = substream(seed);
        let a1 = 1.0 / (input_dim.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden.max(1) as f64).sqrt();
        let mut m = Self::zeros(input_dim, hidden);
        for w in m.w1.iter_mut().chain(m.b1.iter_mut()) {
            *w = rng.gen_range(-a1..=a1);
        }
        for w in m.w2.iter_mut() {
            *w = rng.gen_range(-a2..=a2);
        }
        m.b2 = rng.gen_range(-a2..=a2);
        m
    }

    /// `k*n + 2k + 1`.
    pub fn n_params(&self) -> usize {
        self.hidden * self.input_dim + 2 * self.hidden + 1
    }

    /// Flat parameter vector in the order `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params(), "parameter vector length");
        let (kn, k) = (self.hidden * self.input_dim, self.hidden);
        self.w1.copy_from_slice(&p[..kn]);
        self.b1.copy_from_slice(&p[kn..kn + k]);
        self.w2.copy_from_slice(&p[kn + k..kn + 2 * k]);
        self.b2 = p[kn + 2 * k];
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut out = self.b2;
        for j in 0..self.hidden {
            let w = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            let mut u = self.b1[j];
            for (a, b) in w.iter().zip(x) {
                u += a * b;
            }
            out += self.w2[j] * u.tanh();
        }
        out
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim {
            return Err(Error::Dimension { expected: self.input_dim, got: x.cols() });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

pub fn mlp_forward(m: &MlpModel, x: &[f64]) -> Result<f64> {
    if x.len() != m.input_dim {
        return Err(Error::Dimension { expected: m.input_dim, got: x.len() });
    }
    Ok(m.predict_row(x))
}

/// Mean squared error over the batch and its gradient, laid out like
/// [`MlpModel::params`].
pub fn mlp_gradient(m: &MlpModel, x: &Matrix, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x.cols() != m.input_dim {
        return Err(Error::Dimension { expected: m.input_dim, got: x.cols() });
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension { expected: x.rows(), got: y.len() });
    }
    if x.rows() == 0 {
        return Err(Error::Empty("empty batch".into()));
    }
    let (n, k) = (m.input_dim, m.hidden);
    let mut g = vec![0.0; m.n_params()];
    let (gw1, rest) = g.split_at_mut(k * n);
    let (gb1, rest) = rest.split_at_mut(k);
    let (gw2, gb2) = rest.split_at_mut(k);
    let mut h = vec![0.0; k];
    let mut loss = 0.0;
    for (xr, &yt) in x.iter_rows().zip(y) {
        let mut out = m.b2;
        for j in 0..k {
            let w = &m.w1[j * n..(j + 1) * n];
            let mut u = m.b1[j];
            for (a, b) in w.iter().zip(xr) {
                u += a * b;
            }
            h[j] = u.tanh();
            out += m.w2[j] * h[j];
        }
        let e = out - yt;
        loss += e * e;
        let de = 2.0 * e;
        gb2[0] += de;
        for j in 0..k {
            gw2[j] += de * h[j];
            let dz = de * m.w2[j] * (1.0 - h[j] * h[j]);
            gb1[j] += dz;
            let row = &mut gw1[j * n..(j + 1) * n];
            for (gr, xv) in row.iter_mut().zip(xr) {
                *gr += dz * xv;
            }
        }
    }
    let inv = 1.0 / x.rows() as f64;
    for v in g.iter_mut() {
        *v *= inv;
    }
    Ok((loss * inv, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpTrainSpec {
    pub epochs: usize,
    pub hidden_count: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Step multiplier after a rejected (loss-increasing) update.
    pub decay: f64,
    /// Step multiplier after an accepted update.
    pub growth: f64,
}

impl MlpTrainSpec {
    pub fn new(hidden_count: usize, epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            hidden_count,
            seed,
            learning_rate: 0.05,
            momentum: 0.9,
            decay: 0.5,
            growth: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrainOutcome {
    pub model: MlpModel,
    /// Epoch at which the returned snapshot was taken (0 = initial weights).
    pub best_epoch: usize,
    pub best_val_mae: f64,
    pub final_train_loss: f64,
}

fn mae_of(m: &MlpModel, x: &Matrix, y: &[f64]) -> f64 {
    x.iter_rows().zip(y).map(|(r, t)| (m.predict_row(r) - t).abs()).sum::<f64>() / y.len() as f64
}

/// Trains for exactly `spec.epochs` epochs and returns the snapshot with the
/// lowest validation MAE. A non-finite loss is reported as an error.
pub fn mlp_train(
    train_x: &Matrix,
    train_y: &[f64],
    val_x: &Matrix,
    val_y: &[f64],
    spec: &MlpTrainSpec,
) -> Result<MlpTrainOutcome> {
    if spec.epochs == 0 || spec.hidden_count == 0 {
        return Err(Error::InvalidParameter("MLP needs at least one epoch and one hidden unit".into()));
    }
    if val_x.rows() == 0 || val_y.len() != val_x.rows() {
        return Err(Error::Empty("MLP validation segment is empty".into()));
    }
    if val_x.cols() != train_x.cols() {
        return Err(Error::Dimension { expected: train_x.cols(), got: val_x.cols() });
    }
    let mut model = MlpModel::random(train_x.cols(), spec.hidden_count, spec.seed);
    let (mut loss, mut grad) = mlp_gradient(&model, train_x, train_y)?;
    if !loss.is_finite() {
        return Err(Error::Numerical("MLP loss is not finite at initialization".into()));
    }
    let mut theta = model.params();
    let mut velocity = vec![0.0; theta.len()];
    let mut lr = spec.learning_rate;
    let mut best = (mae_of(&model, val_x, val_y), 0usize, model.clone());
    let mut trial = model.clone();
    for epoch in 1..=spec.epochs {
        for (v, g) in velocity.iter_mut().zip(&grad) {
            *v = spec.momentum * *v - lr * g;
        }
        let cand: Vec<f64> = theta.iter().zip(&velocity).map(|(t, v)| t + v).collect();
        trial.set_params(&cand);
        let (l, g) = mlp_gradient(&trial, train_x, train_y)?;
        if !l.is_finite() {
            return Err(Error::Numerical(format!("MLP training diverged at epoch {epoch}")));
        }
        if l > loss {
            lr *= spec.decay;
            velocity.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        lr *= spec.growth;
        theta = cand;
        loss = l;
        grad = g;
        model.set_params(&theta);
        let v = mae_of(&model, val_x, val_y);
        if v < best.0 {
            best = (v, epoch, model.clone());
        }
    }
    Ok(MlpTrainOutcome { model: best.2, best_epoch: best.1, best_val_mae: best.0, final_train_loss: loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PILOT_SEEDS: u64 = 5;

    #[test]
    fn zero_model_outputs_zero() {
        assert_eq!(mlp_forward(&MlpModel::zeros(3, 4), &[1.0, -2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn one_unit_closed_form() {
        let m = MlpModel { input_dim: 1, hidden: 1, w1: vec![1.0], b1: vec![0.0], w2: vec![1.0], b2: 0.0 };
        assert!((mlp_forward(&m, &[0.5]).unwrap() - 0.462_117_157_260_009_8).abs() < 1e-15);
    }

    #[test]
    fn parameter_count() {
        let m = MlpModel::random(10, 5, 1);
        assert_eq!(m.n_params(), 61);
        assert_eq!(m.params().len(), 61);
    }

    #[test]
    fn duplicated_batch_same_gradient() {
        let m = MlpModel::random(2, 3, 7);
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![-0.5, 0.9]]).unwrap();
        let xx = Matrix::from_rows(&[vec![0.1, 0.2], vec![-0.5, 0.9], vec![0.1, 0.2], vec![-0.5, 0.9]]).unwrap();
        let (_, g1) = mlp_gradient(&m, &x, &[0.3, -0.1]).unwrap();
        let (_, g2) = mlp_gradient(&m, &xx, &[0.3, -0.1, 0.3, -0.1]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_at_perfect_constant_fit() {
        let mut m = MlpModel::zeros(2, 3);
        m.b2 = 1.5;
        let x = Matrix::from_rows(&[vec![0.3, 0.1], vec![-1.0, 2.0]]).unwrap();
        let (l, g) = mlp_gradient(&m, &x, &[1.5, 1.5]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-10);
    }

    #[test]
    fn zero_target_is_learned() {
        let x = Matrix::from_vec(50, 2, (0..100).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect()).unwrap();
        let y = vec![0.0; 50];
        let out = mlp_train(&x, &y, &x, &y, &MlpTrainSpec::new(5, 300, 3)).unwrap();
        let mae = mae_of(&out.model, &x, &y);
        assert!(mae < 1e-3, "{mae}");
    }

    #[test]
    fn training_is_reproducible() {
        let x = Matrix::from_vec(30, 1, (0..30).map(|i| i as f64 / 15.0 - 1.0).collect()).unwrap();
        let y: Vec<f64> = x.as_slice().iter().map(|v| v.sin()).collect();
        let s = MlpTrainSpec::new(4, 100, 11);
        assert_eq!(mlp_train(&x, &y, &x, &y, &s).unwrap(), mlp_train(&x, &y, &x, &y, &s).unwrap());
    }

    #[test]
    fn learns_steep_tanh() {
        let grid = |n: usize, off: f64| -> Matrix {
            Matrix::from_vec(n, 1, (0..n).map(|i| -1.0 + (i as f64 + off) * 2.0 / n as f64).collect()).unwrap()
        };
        let (xt, xv) = (grid(100, 0.0), grid(100, 0.5));
        let f = |x: &Matrix| -> Vec<f64> { x.as_slice().iter().map(|v| (3.0 * v).tanh()).collect() };
        let (yt, yv) = (f(&xt), f(&xv));
        for seed in 0..PILOT_SEEDS {
            let out = mlp_train(&xt, &yt, &xv, &yv, &MlpTrainSpec::new(5, 900, seed)).unwrap();
            let mae = mae_of(&out.model, &xt, &yt);
            assert!(mae < 0.02, "seed {seed}: {mae}");
        }
    }
}
