//! epsilon-insensitive support vector regression with an RBF kernel,
//! trained by sequential minimal optimization on the 2n-variable dual
//!
//!   min  1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a <= C
//!
//! where the first n variables carry `alpha` (sign +1, p = eps - y) and the
//! last n carry `alpha*` (sign -1, p = eps + y).

use std::sync::Arc;

use rayon::prelude::*;

use super::functions::rbf;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const TAU: f64 = 1e-12;
/// Kernel cache default: 1 GiB.
pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    /// Box constraint.
    pub c: f64,
    /// RBF scale in `exp(-gamma |x - x'|^2)`.
    pub gamma: f64,
    /// Tube half-width.
    pub epsilon: f64,
    /// Stopping tolerance on the maximal violating pair gap.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(10^7, 100 * 2n)`.
    pub max_iter: Option<usize>,
    pub cache_bytes: usize,
}

impl SvrParams {
    pub fn new(c: f64, gamma: f64, epsilon: f64) -> Self {
        Self {
            c,
            gamma,
            epsilon,
            tolerance: 1e-3,
            max_iter: None,
            cache_bytes: DEFAULT_CACHE_BYTES,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.c) && ok(self.gamma) && self.epsilon >= 0.0 && self.epsilon.is_finite() && ok(self.tolerance)) {
            return Err(Error::InvalidParameter(format!(
                "SVR needs C, gamma, tolerance > 0 and epsilon >= 0 (C={}, gamma={}, epsilon={})",
                self.c, self.gamma, self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Matrix,
    /// `alpha_i - alpha*_i` for each stored vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrFitInfo {
    pub iterations: usize,
    /// Final maximal violating pair gap.
    pub kkt_gap: f64,
    /// Dual objective `1/2 b'Kb - y'b + eps |b|_1`.
    pub objective: f64,
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.dual_coef.len()
    }

    pub fn input_dim(&self) -> usize {
        self.support_vectors.cols()
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for (sv, c) in self.support_vectors.iter_rows().zip(&self.dual_coef) {
            s += c * rbf(self.gamma, sv, x);
        }
        s
    }
}

pub fn svr_predict(m: &SvrModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != m.input_dim() && m.n_support() > 0 {
        return Err(Error::Dimension { expected: m.input_dim(), got: x.cols() });
    }
    Ok(x.iter_rows().map(|r| m.predict_row(r)).collect())
}

pub fn svr_fit(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    svr_fit_with_info(x, y, params).map(|(m, _)| m)
}

pub fn svr_fit_with_info(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<(SvrModel, SvrFitInfo)> {
    params.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("training data contains missing or non-finite values".into()));
    }
    let mut solver = Solver::new(x, y, params);
    let iterations = solver.run()?;
    Ok(solver.into_model(iterations))
}

/// Largest violation of the epsilon-SVR optimality conditions over the
/// training set, measured on residuals `y_i - f(x_i)`.
pub fn svr_kkt_violation(m: &SvrModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    let mut beta = vec![0.0; x.rows()];
    for (&i, &c) in m.support_indices.iter().zip(&m.dual_coef) {
        beta[i] = c;
    }
    let pred = svr_predict(m, x)?;
    let eps = m.epsilon;
    let bound = m.c * (1.0 - 1e-12);
    let mut worst = 0.0f64;
    for i in 0..x.rows() {
        let r = y[i] - pred[i];
        let b = beta[i];
        let v = if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if b >= bound {
            (eps - r).max(0.0)
        } else if b <= -bound {
            (r + eps).max(0.0)
        } else if b > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Least-recently-used cache of kernel rows, keyed by training sample.
struct KernelCache<'a> {
    x: &'a Matrix,
    gamma: f64,
    rows: Vec<Option<Arc<[f64]>>>,
    stamp: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Matrix, gamma: f64, budget: usize) -> Self {
        let n = x.rows();
        let capacity = (budget / (n.max(1) * std::mem::size_of::<f64>())).clamp(2, n.max(2));
        Self {
            x,
            gamma,
            rows: vec![None; n],
            stamp: vec![0; n],
            clock: 0,
            cached: 0,
            capacity,
        }
    }

    fn row(&mut self, s: usize) -> Arc<[f64]> {
        self.clock += 1;
        self.stamp[s] = self.clock;
        if let Some(r) = &self.rows[s] {
            return r.clone();
        }
        if self.cached >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| self.rows[k].is_some() && k != s)
                .min_by_key(|&k| self.stamp[k])
                .expect("cache is non-empty when full");
            self.rows[victim] = None;
            self.cached -= 1;
        }
        let x = self.x;
        let xs = x.row(s);
        let gamma = self.gamma;
        let row: Arc<[f64]> = if x.rows() * x.cols() >= 1 << 15 {
            (0..x.rows())
                .into_par_iter()
                .map(|k| rbf(gamma, xs, x.row(k)))
                .collect::<Vec<_>>()
                .into()
        } else {
            (0..x.rows()).map(|k| rbf(gamma, xs, x.row(k))).collect::<Vec<_>>().into()
        };
        self.rows[s] = Some(row.clone());
        self.cached += 1;
        row
    }
}

struct Solver<'a> {
    x: &'a Matrix,
    n: usize,
    c: f64,
    tolerance: f64,
    max_iter: usize,
    params: SvrParams,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    p: Vec<f64>,
    cache: KernelCache<'a>,
    last_gap: f64,
}

impl<'a> Solver<'a> {
    fn new(x: &'a Matrix, y: &'a [f64], params: &SvrParams) -> Self {
        let n = x.rows();
        let p: Vec<f64> = (0..2 * n)
            .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
            .collect();
        Self {
            x,
            n,
            c: params.c,
            tolerance: params.tolerance,
            max_iter: params.max_iter.unwrap_or_else(|| 10_000_000usize.max(200 * n)),
            params: *params,
            alpha: vec![0.0; 2 * n],
            grad: p.clone(),
            p,
            cache: KernelCache::new(x, params.gamma, params.cache_bytes),
            last_gap: f64::INFINITY,
        }
    }

    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn sample(&self, t: usize) -> usize {
        if t < self.n {
            t
        } else {
            t - self.n
        }
    }

    /// Maximal violating `i`, then `j` by second-order gain. `None` at optimality.
    fn select(&mut self) -> Option<(usize, usize, Arc<[f64]>)> {
        let l = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if t < self.n {
                if self.alpha[t] < self.c && -self.grad[t] >= gmax {
                    gmax = -self.grad[t];
                    i_sel = Some(t);
                }
            } else if self.alpha[t] > 0.0 && self.grad[t] >= gmax {
                gmax = self.grad[t];
                i_sel = Some(t);
            }
        }
        let i = i_sel?;
        let ki = self.cache.row(self.sample(i));
        let yi = self.sign(i);
        let qd_i = 1.0;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..l {
            let s = self.sample(t);
            // y_i * Q_it = y_t K_it
            let yq = self.sign(t) * ki[s];
            if t < self.n {
                if self.alpha[t] > 0.0 {
                    let diff = gmax + self.grad[t];
                    if self.grad[t] >= gmax2 {
                        gmax2 = self.grad[t];
                    }
                    if diff > 0.0 {
                        let quad = qd_i + 1.0 - 2.0 * yi * yq;
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            } else if self.alpha[t] < self.c {
                let diff = gmax - self.grad[t];
                if -self.grad[t] >= gmax2 {
                    gmax2 = -self.grad[t];
                }
                if diff > 0.0 {
                    let quad = qd_i + 1.0 + 2.0 * yi * yq;
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        self.last_gap = gmax + gmax2;
        if self.last_gap < self.tolerance {
            return None;
        }
        j_sel.map(|j| (i, j, ki))
    }

    fn run(&mut self) -> Result<usize> {
        let mut iter = 0;
        while let Some((i, j, ki)) = self.select() {
            if iter >= self.max_iter {
                return Err(Error::NotConverged { iterations: iter, violation: self.last_gap });
            }
            iter += 1;
            let kj = self.cache.row(self.sample(j));
            let (yi, yj) = (self.sign(i), self.sign(j));
            let kij = ki[self.sample(j)];
            let qij = yi * yj * kij;
            let c = self.c;
            let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
            let (mut ai, mut aj) = (old_i, old_j);
            if yi != yj {
                let quad = (2.0 + 2.0 * qij).max(TAU);
                let delta = (-self.grad[i] - self.grad[j]) / quad;
                let diff = ai - aj;
                ai += delta;
                aj += delta;
                if diff > 0.0 {
                    if aj < 0.0 {
                        aj = 0.0;
                        ai = diff;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = -diff;
                }
                if diff > 0.0 {
                    if ai > c {
                        ai = c;
                        aj = c - diff;
                    }
                } else if aj > c {
                    aj = c;
                    ai = c + diff;
                }
            } else {
                let quad = (2.0 - 2.0 * qij).max(TAU);
                let delta = (self.grad[i] - self.grad[j]) / quad;
                let sum = ai + aj;
                ai -= delta;
                aj += delta;
                if sum > c {
                    if ai > c {
                        ai = c;
                        aj = sum - c;
                    }
                } else if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if sum > c {
                    if aj > c {
                        aj = c;
                        ai = sum - c;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
            let di = ai - old_i;
            let dj = aj - old_j;
            if di == 0.0 && dj == 0.0 {
                continue;
            }
            let n = self.n;
            // G_t += Q_ti di + Q_tj dj with Q_ts = y_t y_s K
            let (wi, wj) = (yi * di, yj * dj);
            for s in 0..n {
                let g = wi * ki[s] + wj * kj[s];
                self.grad[s] += g;
                self.grad[s + n] -= g;
            }
        }
        Ok(iter)
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in 0..2 * self.n {
            let yg = self.sign(t) * self.grad[t];
            let up = t < self.n;
            if self.alpha[t] >= self.c {
                if up {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if up {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }

    fn into_model(self, iterations: usize) -> (SvrModel, SvrFitInfo) {
        let n = self.n;
        let objective = 0.5
            * (0..2 * n)
                .map(|t| self.alpha[t] * (self.grad[t] + self.p[t]))
                .sum::<f64>();
        let bias = self.bias();
        let mut idx = Vec::new();
        let mut coef = Vec::new();
        for i in 0..n {
            let b = self.alpha[i] - self.alpha[i + n];
            if b != 0.0 {
                idx.push(i);
                coef.push(b);
            }
        }
        let model = SvrModel {
            support_vectors: self.x.select_rows(&idx),
            dual_coef: coef,
            bias,
            gamma: self.params.gamma,
            c: self.params.c,
            epsilon: self.params.epsilon,
            support_indices: idx,
        };
        let info = SvrFitInfo { iterations, kkt_gap: self.last_gap.max(0.0), objective };
        (model, info)
    }
}
