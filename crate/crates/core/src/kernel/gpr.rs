//! Exact Gaussian process regression with a constant mean basis.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::functions::{KernelId, KernelParams};
use crate::error::{Error, Result};
use crate::linalg::{sample_std, squared_distance, Matrix};

/// Training sets above this size trigger a cost warning.
pub const GPR_WARN_ROWS: usize = 10_000;
const JITTER_STEPS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Log-space box for the optimizer: `[lower, upper]` per hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprBounds {
    pub sigma_f: (f64, f64),
    pub length_scale: (f64, f64),
    pub noise_std: (f64, f64),
}

impl GprBounds {
    /// Noise confined to `[1e-2 std(y), std(y)/sqrt(2)]`, the others given
    /// three decades either side of their starting values.
    pub fn for_target(y_std: f64, start: &KernelParams) -> Self {
        let s = if y_std > 0.0 { y_std } else { 1.0 };
        Self {
            sigma_f: (start.sigma_f * 1e-3, start.sigma_f * 1e3),
            length_scale: (start.length_scale * 1e-3, start.length_scale * 1e3),
            noise_std: (1e-2 * s, s / 2f64.sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprSpec {
    pub kernel: KernelId,
    pub params: KernelParams,
    pub noise_std: f64,
    pub optimize: bool,
    /// Optimizer box; `None` derives it from the training target.
    pub bounds: Option<GprBounds>,
    pub max_iter: usize,
}

impl GprSpec {
    pub fn fixed(kernel: KernelId, params: KernelParams, noise_std: f64) -> Self {
        Self { kernel, params, noise_std, optimize: false, bounds: None, max_iter: 100 }
    }

    pub fn optimized(kernel: KernelId, params: KernelParams, noise_std: f64) -> Self {
        Self { optimize: true, ..Self::fixed(kernel, params, noise_std) }
    }

    /// Default starting point: length scale = mean feature std,
    /// amplitude = std(y)/sqrt(2).
    pub fn default_start(x: &Matrix, y: &[f64]) -> KernelParams {
        let d = x.cols().max(1);
        let ls = (0..x.cols()).map(|j| sample_std(&x.column(j))).sum::<f64>() / d as f64;
        let sy = sample_std(y);
        KernelParams {
            sigma_f: if sy > 0.0 { sy / 2f64.sqrt() } else { 1.0 },
            length_scale: if ls > 0.0 { ls } else { 1.0 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct GprModel {
    pub train_x: Matrix,
    pub alpha: Vec<f64>,
    pub kernel: KernelId,
    pub params: KernelParams,
    pub noise_std: f64,
    pub beta: f64,
    /// Diagonal jitter that was needed for the factorization.
    pub jitter: f64,
    factor: OnceLock<Arc<DMatrix<f64>>>,
}

impl PartialEq for GprModel {
    fn eq(&self, o: &Self) -> bool {
        self.train_x == o.train_x
            && self.alpha == o.alpha
            && self.kernel == o.kernel
            && self.params == o.params
            && self.noise_std == o.noise_std
            && self.beta == o.beta
            && self.jitter == o.jitter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GprPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Queries whose variance went negative and was clamped to zero.
    pub clamped: usize,
}

impl GprModel {
    pub fn from_parts(
        train_x: Matrix,
        alpha: Vec<f64>,
        kernel: KernelId,
        params: KernelParams,
        noise_std: f64,
        beta: f64,
        jitter: f64,
    ) -> Result<Self> {
        if alpha.len() != train_x.rows() {
            return Err(Error::Dimension { expected: train_x.rows(), got: alpha.len() });
        }
        KernelParams::new(params.sigma_f, params.length_scale)?;
        if !(noise_std > 0.0) {
            return Err(Error::InvalidParameter(format!("noise std must be positive, got {noise_std}")));
        }
        Ok(Self { train_x, alpha, kernel, params, noise_std, beta, jitter, factor: OnceLock::new() })
    }

    pub fn n_train(&self) -> usize {
        self.train_x.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.train_x.cols()
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut s = self.beta;
        for (xi, a) in self.train_x.iter_rows().zip(&self.alpha) {
            s += a * self.kernel.from_sq_dist(&self.params, squared_distance(xi, x));
        }
        s
    }

    fn lower_factor(&self) -> Result<Arc<DMatrix<f64>>> {
        if let Some(l) = self.factor.get() {
            return Ok(l.clone());
        }
        let d2 = pairwise_sq(&self.train_x);
        let k = gram_from_sq(&d2, self.kernel, &self.params);
        let a = with_diagonal(&k, self.noise_std * self.noise_std + self.jitter);
        let chol = Cholesky::new(a).ok_or_else(|| Error::Numerical("stored GPR covariance is not positive definite".into()))?;
        let l = Arc::new(chol.l());
        Ok(self.factor.get_or_init(|| l).clone())
    }
}

fn check_dims(m: &GprModel, x: &Matrix) -> Result<()> {
    if x.cols() != m.input_dim() {
        return Err(Error::Dimension { expected: m.input_dim(), got: x.cols() });
    }
    Ok(())
}

pub fn gpr_predict_mean(m: &GprModel, x: &Matrix) -> Result<Vec<f64>> {
    check_dims(m, x)?;
    Ok(x.iter_rows().map(|r| m.predict_row(r)).collect())
}

pub fn gpr_predict(m: &GprModel, x: &Matrix) -> Result<GprPrediction> {
    check_dims(m, x)?;
    let l = m.lower_factor()?;
    let n = m.n_train();
    let sf2 = m.params.sigma_f * m.params.sigma_f;
    let s2 = m.noise_std * m.noise_std;
    let mut mean = Vec::with_capacity(x.rows());
    let mut variance = Vec::with_capacity(x.rows());
    let mut clamped = 0;
    for q in x.iter_rows() {
        let ks = DVector::from_iterator(
            n,
            m.train_x.iter_rows().map(|xi| m.kernel.from_sq_dist(&m.params, squared_distance(xi, q))),
        );
        mean.push(m.beta + ks.iter().zip(&m.alpha).map(|(k, a)| k * a).sum::<f64>());
        let v = l.solve_lower_triangular(&ks).expect("factor has a positive diagonal");
        let var = sf2 - v.dot(&v) + s2;
        if var < 0.0 {
            clamped += 1;
            variance.push(0.0);
        } else {
            variance.push(var);
        }
    }
    Ok(GprPrediction { mean, variance, clamped })
}

fn pairwise_sq(x: &Matrix) -> DMatrix<f64> {
    let n = x.rows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = squared_distance(x.row(i), x.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn gram_from_sq(d2: &DMatrix<f64>, id: KernelId, p: &KernelParams) -> DMatrix<f64> {
    d2.map(|r2| id.from_sq_dist(p, r2))
}

fn with_diagonal(k: &DMatrix<f64>, add: f64) -> DMatrix<f64> {
    let mut a = k.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += add;
    }
    a
}

/// Gram matrix `K(X, X)` for the given kernel.
pub fn gram_matrix(x: &Matrix, id: KernelId, p: &KernelParams) -> Matrix {
    Matrix::from_nalgebra(&gram_from_sq(&pairwise_sq(x), id, p))
}

fn factorize(k: &DMatrix<f64>, noise_var: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for &j in &JITTER_STEPS {
        if let Some(c) = Cholesky::new(with_diagonal(k, noise_var + j)) {
            return Ok((c, j));
        }
    }
    Err(Error::Numerical(format!(
        "covariance matrix not positive definite even with jitter {}",
        JITTER_STEPS[JITTER_STEPS.len() - 1]
    )))
}

struct Evaluation {
    lml: f64,
    /// d lml / d (log sigma_f, log length_scale, log noise_std)
    grad: [f64; 3],
    beta: f64,
    alpha: Vec<f64>,
    jitter: f64,
}

fn evaluate(
    d2: &DMatrix<f64>,
    y: &[f64],
    id: KernelId,
    p: &KernelParams,
    noise: f64,
    fixed_beta: Option<f64>,
    with_grad: bool,
) -> Result<Evaluation> {
    let n = y.len();
    let k = gram_from_sq(d2, id, p);
    let (chol, jitter) = factorize(&k, noise * noise)?;
    let yv = DVector::from_column_slice(y);
    let ay = chol.solve(&yv);
    let beta = match fixed_beta {
        Some(b) => b,
        None => {
            let a1 = chol.solve(&DVector::from_element(n, 1.0));
            ay.sum() / a1.sum()
        }
    };
    let r = yv.add_scalar(-beta);
    let alpha = chol.solve(&r);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * r.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln();
    let mut grad = [0.0; 3];
    if with_grad {
        // 1/2 tr((a a' - A^-1) dA)
        let ainv = chol.inverse();
        let (mut gf, mut gl, mut gn) = (0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = alpha[i] * alpha[j] - ainv[(i, j)];
                gf += w * 2.0 * k[(i, j)];
                gl += w * id.d_log_length(p, d2[(i, j)]);
            }
            gn += (alpha[j] * alpha[j] - ainv[(j, j)]) * 2.0 * noise * noise;
        }
        grad = [0.5 * gf, 0.5 * gl, 0.5 * gn];
    }
    Ok(Evaluation { lml, grad, beta, alpha: alpha.iter().copied().collect(), jitter })
}

fn check_training(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension { expected: x.rows(), got: y.len() });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("training data contains missing or non-finite values".into()));
    }
    Ok(())
}

/// Log marginal likelihood with the constant mean profiled out by
/// generalized least squares, or held at `fixed_beta` if given.
pub fn gpr_log_marginal_likelihood(
    x: &Matrix,
    y: &[f64],
    id: KernelId,
    p: &KernelParams,
    noise_std: f64,
    fixed_beta: Option<f64>,
) -> Result<f64> {
    check_training(x, y)?;
    KernelParams::new(p.sigma_f, p.length_scale)?;
    Ok(evaluate(&pairwise_sq(x), y, id, p, noise_std, fixed_beta, false)?.lml)
}

/// Value and gradient with respect to `(log sigma_f, log length_scale, log noise_std)`.
pub fn gpr_lml_gradient(
    x: &Matrix,
    y: &[f64],
    id: KernelId,
    p: &KernelParams,
    noise_std: f64,
) -> Result<(f64, [f64; 3])> {
    check_training(x, y)?;
    KernelParams::new(p.sigma_f, p.length_scale)?;
    let e = evaluate(&pairwise_sq(x), y, id, p, noise_std, None, true)?;
    Ok((e.lml, e.grad))
}

pub fn gpr_fit(x: &Matrix, y: &[f64], spec: &GprSpec) -> Result<GprModel> {
    check_training(x, y)?;
    KernelParams::new(spec.params.sigma_f, spec.params.length_scale)?;
    if !(spec.noise_std > 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise std must be positive, got {}", spec.noise_std)));
    }
    if x.rows() > GPR_WARN_ROWS {
        eprintln!(
            "warning: exact GPR on {} rows needs O(n^3) time and O(n^2) memory",
            x.rows()
        );
    }
    let d2 = pairwise_sq(x);
    let (params, noise) = if spec.optimize {
        let bounds = spec.bounds.unwrap_or_else(|| GprBounds::for_target(sample_std(y), &spec.params));
        optimize(&d2, y, spec, &bounds)?
    } else {
        (spec.params, spec.noise_std)
    };
    let e = evaluate(&d2, y, spec.kernel, &params, noise, None, false)?;
    Ok(GprModel {
        train_x: x.clone(),
        alpha: e.alpha,
        kernel: spec.kernel,
        params,
        noise_std: noise,
        beta: e.beta,
        jitter: e.jitter,
        factor: OnceLock::new(),
    })
}

/// Projected BFGS on the negative log marginal likelihood in log space.
fn optimize(d2: &DMatrix<f64>, y: &[f64], spec: &GprSpec, b: &GprBounds) -> Result<(KernelParams, f64)> {
    let lo = [b.sigma_f.0.ln(), b.length_scale.0.ln(), b.noise_std.0.ln()];
    let hi = [b.sigma_f.1.ln(), b.length_scale.1.ln(), b.noise_std.1.ln()];
    let clamp = |z: [f64; 3]| -> [f64; 3] { std::array::from_fn(|i| z[i].clamp(lo[i], hi[i].max(lo[i]))) };
    let objective = |z: &[f64; 3]| -> Option<(f64, [f64; 3])> {
        let p = KernelParams { sigma_f: z[0].exp(), length_scale: z[1].exp() };
        let e = evaluate(d2, y, spec.kernel, &p, z[2].exp(), None, true).ok()?;
        e.lml.is_finite().then(|| (-e.lml, e.grad.map(|g| -g)))
    };
    let mut z = clamp([spec.params.sigma_f.ln(), spec.params.length_scale.ln(), spec.noise_std.ln()]);
    let (mut f, mut g) = objective(&z).ok_or_else(|| Error::Numerical("GPR likelihood undefined at the starting point".into()))?;
    let mut h = [[0.0; 3]; 3];
    let reset = |h: &mut [[f64; 3]; 3]| {
        *h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    };
    reset(&mut h);
    for _ in 0..spec.max_iter {
        let free: [bool; 3] = std::array::from_fn(|i| !((z[i] <= lo[i] && g[i] > 0.0) || (z[i] >= hi[i] && g[i] < 0.0)));
        let pg: [f64; 3] = std::array::from_fn(|i| if free[i] { g[i] } else { 0.0 });
        if pg.iter().all(|v| v.abs() < 1e-6) {
            break;
        }
        let mut d: [f64; 3] = std::array::from_fn(|i| {
            if free[i] {
                -(0..3).filter(|&j| free[j]).map(|j| h[i][j] * pg[j]).sum::<f64>()
            } else {
                0.0
            }
        });
        if (0..3).map(|i| d[i] * pg[i]).sum::<f64>() >= 0.0 {
            reset(&mut h);
            d = pg.map(|v| -v);
        }
        let big = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big > 2.0 {
            d = d.map(|v| v * 2.0 / big);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let zn = clamp(std::array::from_fn(|i| z[i] + t * d[i]));
            if let Some((fn_, gn)) = objective(&zn) {
                let decrease: f64 = (0..3).map(|i| g[i] * (zn[i] - z[i])).sum();
                if fn_ <= f + 1e-4 * decrease {
                    accepted = Some((zn, fn_, gn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((zn, fnew, gnew)) = accepted else { break };
        let s: [f64; 3] = std::array::from_fn(|i| zn[i] - z[i]);
        let yk: [f64; 3] = std::array::from_fn(|i| gnew[i] - g[i]);
        let sy: f64 = (0..3).map(|i| s[i] * yk[i]).sum();
        let done = (f - fnew).abs() <= 1e-10 * (1.0 + f.abs());
        if sy > 1e-12 {
            let hy: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| h[i][j] * yk[j]).sum());
            let yhy: f64 = (0..3).map(|i| yk[i] * hy[i]).sum();
            let rho = 1.0 / sy;
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        z = zn;
        f = fnew;
        g = gnew;
        if done {
            break;
        }
    }
    Ok((KernelParams { sigma_f: z[0].exp(), length_scale: z[1].exp() }, z[2].exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn problem(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let y = (0..n).map(|i| x.row(i)[0].sin() + 0.05 * rng.gen_range(-1.0..1.0)).collect();
        (x, y)
    }

    #[test]
    fn scalar_likelihood_closed_form() {
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let v = gpr_log_marginal_likelihood(&x, &[0.0], KernelId::SquaredExponential, &p, 1.0, Some(0.0)).unwrap();
        assert!((v - (-0.5 * (4.0 * PI).ln())).abs() < 1e-12);
        assert!((v + 1.265_512_123_484_645).abs() < 1e-9);
    }

    #[test]
    fn single_point_interpolates_as_noise_vanishes() {
        let x = Matrix::from_rows(&[vec![0.4, 1.0]]).unwrap();
        let spec = GprSpec::fixed(KernelId::Matern52, KernelParams::new(1.0, 1.0).unwrap(), 1e-6);
        let m = gpr_fit(&x, &[3.0], &spec).unwrap();
        assert!((gpr_predict_mean(&m, &x).unwrap()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn far_queries_revert_to_prior() {
        let (x, y) = problem(20, 2, 1);
        let p = KernelParams::new(1.5, 0.5).unwrap();
        let m = gpr_fit(&x, &y, &GprSpec::fixed(KernelId::SquaredExponential, p, 0.1)).unwrap();
        let far = Matrix::from_rows(&[vec![1e3, -1e3]]).unwrap();
        let pr = gpr_predict(&m, &far).unwrap();
        assert!((pr.mean[0] - m.beta).abs() < 1e-12);
        assert!((pr.variance[0] - (2.25 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        let (x, y) = problem(20, 3, 2);
        for id in KernelId::ALL {
            let p = KernelParams::new(0.9, 1.3).unwrap();
            let (_, g) = gpr_lml_gradient(&x, &y, id, &p, 0.2).unwrap();
            let h = 1e-5;
            let at = |dz: [f64; 3]| {
                let q = KernelParams::new(0.9 * dz[0].exp(), 1.3 * dz[1].exp()).unwrap();
                gpr_log_marginal_likelihood(&x, &y, id, &q, 0.2 * dz[2].exp(), None).unwrap()
            };
            for k in 0..3 {
                let mut up = [0.0; 3];
                let mut dn = [0.0; 3];
                up[k] = h;
                dn[k] = -h;
                let fd = (at(up) - at(dn)) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "{id} {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn optimization_improves_likelihood_within_bounds() {
        let (x, y) = problem(40, 2, 3);
        let start = KernelParams::new(0.3, 5.0).unwrap();
        let spec = GprSpec::optimized(KernelId::Matern32, start, 0.5);
        let m = gpr_fit(&x, &y, &spec).unwrap();
        let before = gpr_log_marginal_likelihood(&x, &y, spec.kernel, &start, 0.5, None).unwrap();
        let after = gpr_log_marginal_likelihood(&x, &y, m.kernel, &m.params, m.noise_std, None).unwrap();
        assert!(after > before);
        let sy = sample_std(&y);
        assert!(m.noise_std >= 1e-2 * sy * (1.0 - 1e-12) && m.noise_std <= sy / 2f64.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn lazy_factor_survives_clone() {
        let (x, y) = problem(10, 1, 4);
        let m = gpr_fit(&x, &y, &GprSpec::fixed(KernelId::Matern32, KernelParams::new(1.0, 1.0).unwrap(), 0.1)).unwrap();
        let a = gpr_predict(&m, &x).unwrap();
        let b = gpr_predict(&m.clone(), &x).unwrap();
        assert_eq!(a, b);
        assert!(a.variance.iter().all(|v| *v >= 0.0));
    }
}
