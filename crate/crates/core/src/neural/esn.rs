//! Echo state network: fixed random reservoir plus a ridge readout on
//! `[1; u(n); x(n)]`.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::linear::{fit_mlr, RidgeSpec};
use crate::rng::child;

/// Readout ridge relative to the trace of the centred design.
pub const READOUT_RIDGE_SCALE: f64 = 1e-8;
const MAX_REDRAWS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsnSpec {
    pub spectral_radius: f64,
    pub input_scaling: f64,
    pub reservoir_units: usize,
    pub leaking_rate: f64,
    /// `None` means `min(100, 10% of the training rows)`.
    pub washout: Option<usize>,
    pub seed: u64,
}

impl EsnSpec {
    pub fn new(spectral_radius: f64, input_scaling: f64, reservoir_units: usize, seed: u64) -> Self {
        Self { spectral_radius, input_scaling, reservoir_units, leaking_rate: 1.0, washout: None, seed }
    }

    pub fn washout_for(&self, train_rows: usize) -> usize {
        self.washout.unwrap_or_else(|| 100.min(train_rows / 10))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    pub input_dim: usize,
    /// `units x (1 + input_dim)`, bias column first.
    pub w_in: Matrix,
    /// `units x units`.
    pub w: Matrix,
    /// `[bias, input weights.., state weights..]`, empty until trained.
    pub w_out: Vec<f64>,
    pub spectral_radius: f64,
    pub input_scaling: f64,
    pub leaking_rate: f64,
    pub seed: u64,
}

impl EsnModel {
    pub fn units(&self) -> usize {
        self.w.rows()
    }

    pub fn is_trained(&self) -> bool {
        !self.w_out.is_empty()
    }

    /// One reservoir update in place; `scratch` has `units` entries.
    #[inline]
    fn step(&self, state: &mut [f64], u: &[f64], scratch: &mut [f64]) {
        let nx = self.units();
        for i in 0..nx {
            let wi = self.w_in.row(i);
            let mut s = wi[0];
            for (a, b) in wi[1..].iter().zip(u) {
                s += a * b;
            }
            for (a, b) in self.w.row(i).iter().zip(state.iter()) {
                s += a * b;
            }
            scratch[i] = s.tanh();
        }
        let a = self.leaking_rate;
        if a == 1.0 {
            state.copy_from_slice(scratch);
        } else {
            for (x, t) in state.iter_mut().zip(scratch.iter()) {
                *x = (1.0 - a) * *x + a * t;
            }
        }
    }

    fn readout_row(&self, u: &[f64], x: &[f64]) -> f64 {
        let mut s = self.w_out[0];
        let (wu, wx) = self.w_out[1..].split_at(self.input_dim);
        for (a, b) in wu.iter().zip(u) {
            s += a * b;
        }
        for (a, b) in wx.iter().zip(x) {
            s += a * b;
        }
        s
    }
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(w: &Matrix) -> f64 {
    if w.rows() == 0 {
        return 0.0;
    }
    let m = DMatrix::from_row_slice(w.rows(), w.cols(), w.as_slice());
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn draw(rng: &mut ChaCha8Rng, spec: &EsnSpec, input_dim: usize) -> (Matrix, Matrix) {
    let nx = spec.reservoir_units;
    let w: Vec<f64> = (0..nx * nx).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let is = spec.input_scaling;
    let w_in: Vec<f64> = (0..nx * (1 + input_dim)).map(|_| rng.gen_range(-is..=is)).collect();
    (
        Matrix::from_vec(nx, nx, w).expect("square reservoir"),
        Matrix::from_vec(nx, 1 + input_dim, w_in).expect("input weight shape"),
    )
}

/// Draws the reservoir and rescales it to the requested spectral radius.
pub fn esn_build(spec: &EsnSpec, input_dim: usize) -> Result<EsnModel> {
    if spec.reservoir_units == 0 {
        return Err(Error::InvalidParameter("reservoir needs at least one unit".into()));
    }
    let finite_pos = |v: f64| v > 0.0 && v.is_finite();
    if !(finite_pos(spec.spectral_radius) && spec.input_scaling >= 0.0 && spec.input_scaling.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spectral radius must be > 0 and input scaling >= 0 (got {}, {})",
            spec.spectral_radius, spec.input_scaling
        )));
    }
    if !(spec.leaking_rate > 0.0 && spec.leaking_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!("leaking rate must be in (0, 1], got {}", spec.leaking_rate)));
    }
    for attempt in 0..MAX_REDRAWS {
        let mut rng = child(spec.seed, attempt);
        let (mut w, w_in) = draw(&mut rng, spec, input_dim);
        let raw = spectral_radius(&w);
        if !(raw > 1e-12) {
            continue;
        }
        let scale = spec.spectral_radius / raw;
        for v in w.as_mut_slice() {
            *v *= scale;
        }
        return Ok(EsnModel {
            input_dim,
            w_in,
            w,
            w_out: Vec::new(),
            spectral_radius: spec.spectral_radius,
            input_scaling: spec.input_scaling,
            leaking_rate: spec.leaking_rate,
            seed: spec.seed,
        });
    }
    Err(Error::Numerical("reservoir draws kept a zero spectral radius".into()))
}

/// Replaces missing inputs by the last observed value of the same channel
/// (zero before the first observation). Returns the filled inputs and a
/// per-step flag marking steps that needed filling.
pub fn hold_missing(u: &Matrix) -> (Matrix, Vec<bool>) {
    let mut out = u.clone();
    let mut last = vec![0.0; u.cols()];
    let mut held = vec![false; u.rows()];
    for i in 0..u.rows() {
        let row = out.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            if v.is_finite() {
                last[j] = *v;
            } else {
                *v = last[j];
                held[i] = true;
            }
        }
    }
    (out, held)
}

/// States `x(1..=T)` driven by `u` from `initial` (zeros if `None`).
pub fn esn_run_states(m: &EsnModel, u: &Matrix, initial: Option<&[f64]>) -> Result<Matrix> {
    if u.cols() != m.input_dim {
        return Err(Error::Dimension { expected: m.input_dim, got: u.cols() });
    }
    if u.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("reservoir input contains missing values".into()));
    }
    let nx = m.units();
    let mut state = match initial {
        Some(x0) if x0.len() != nx => return Err(Error::Dimension { expected: nx, got: x0.len() }),
        Some(x0) => x0.to_vec(),
        None => vec![0.0; nx],
    };
    let mut scratch = vec![0.0; nx];
    let mut out = Matrix::zeros(u.rows(), nx);
    for t in 0..u.rows() {
        m.step(&mut state, u.row(t), &mut scratch);
        out.row_mut(t).copy_from_slice(&state);
    }
    Ok(out)
}

fn design(u: &Matrix, states: &Matrix, rows: &[usize]) -> Matrix {
    let p = u.cols() + states.cols();
    let mut data = Vec::with_capacity(rows.len() * p);
    for &t in rows {
        data.extend_from_slice(u.row(t));
        data.extend_from_slice(states.row(t));
    }
    Matrix::from_vec(rows.len(), p, data).expect("design shape")
}

/// Readout regression settings.
#[derive(Debug, Clone, Copy)]
pub struct ReadoutFit<'a> {
    pub washout: usize,
    pub ridge_scale: f64,
    /// Steps excluded from the regression (e.g. filled-in inputs).
    pub skip: Option<&'a [bool]>,
}

impl ReadoutFit<'_> {
    pub fn new(washout: usize) -> Self {
        Self { washout, ridge_scale: READOUT_RIDGE_SCALE, skip: None }
    }
}

/// Fits the readout on `rows` of a precomputed state run, skipping the first
/// `washout` of them and any row whose target is missing or flagged.
pub fn esn_fit_readout(
    m: &EsnModel,
    u: &Matrix,
    states: &Matrix,
    y: &[f64],
    rows: Range<usize>,
    fit: &ReadoutFit<'_>,
) -> Result<EsnModel> {
    let (washout, skip) = (fit.washout, fit.skip);
    if states.rows() != u.rows() || y.len() != u.rows() || rows.end > u.rows() {
        return Err(Error::Dimension { expected: u.rows(), got: states.rows().min(y.len()) });
    }
    if rows.len() <= washout {
        return Err(Error::Empty(format!(
            "training segment of {} rows does not exceed washout {washout}",
            rows.len()
        )));
    }
    let used: Vec<usize> = (rows.start + washout..rows.end)
        .filter(|&t| y[t].is_finite() && !skip.map_or(false, |s| s[t]))
        .collect();
    if used.is_empty() {
        return Err(Error::Empty("no usable readout rows after washout".into()));
    }
    let x = design(u, states, &used);
    let yy: Vec<f64> = used.iter().map(|&t| y[t]).collect();
    let ridge = RidgeSpec::relative_to_trace(&x, fit.ridge_scale);
    let lin = fit_mlr(&x, &yy, ridge)?;
    let mut out = m.clone();
    out.w_out = std::iter::once(lin.intercept).chain(lin.beta).collect();
    Ok(out)
}

/// Readout applied to every step of a state run.
pub fn esn_readout(m: &EsnModel, u: &Matrix, states: &Matrix) -> Result<Vec<f64>> {
    if !m.is_trained() {
        return Err(Error::InvalidParameter("ESN readout is not trained".into()));
    }
    if u.rows() != states.rows() || u.cols() != m.input_dim || states.cols() != m.units() {
        return Err(Error::Dimension { expected: m.input_dim, got: u.cols() });
    }
    Ok((0..u.rows()).map(|t| m.readout_row(u.row(t), states.row(t))).collect())
}

/// Runs the reservoir over `u` and fits the readout on all steps after `washout`.
pub fn esn_train_readout(m: &EsnModel, u: &Matrix, y: &[f64], washout: usize) -> Result<EsnModel> {
    let states = esn_run_states(m, u, None)?;
    esn_fit_readout(m, u, &states, y, 0..u.rows(), &ReadoutFit::new(washout))
}

/// Runs the reservoir from rest over `u` and applies the readout.
pub fn esn_predict(m: &EsnModel, u: &Matrix) -> Result<Vec<f64>> {
    let states = esn_run_states(m, u, None)?;
    esn_readout(m, u, &states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_zero_states() {
        let m = EsnModel {
            input_dim: 2,
            w_in: Matrix::zeros(3, 3),
            w: Matrix::zeros(3, 3),
            w_out: vec![],
            spectral_radius: 0.0,
            input_scaling: 0.0,
            leaking_rate: 1.0,
            seed: 0,
        };
        let u = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert!(esn_run_states(&m, &u, None).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_unit_closed_form() {
        let mut m = EsnModel {
            input_dim: 1,
            w_in: Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap(),
            w: Matrix::zeros(1, 1),
            w_out: vec![],
            spectral_radius: 0.0,
            input_scaling: 1.0,
            leaking_rate: 1.0,
            seed: 0,
        };
        let u = Matrix::from_rows(&[vec![0.3]]).unwrap();
        assert_eq!(esn_run_states(&m, &u, None).unwrap().get(0, 0), 0.3f64.tanh());
        m.leaking_rate = 0.25;
        let x = esn_run_states(&m, &u, Some(&[0.8])).unwrap().get(0, 0);
        assert!((x - (0.75 * 0.8 + 0.25 * 0.3f64.tanh())).abs() < 1e-15);
    }

    #[test]
    fn build_hits_radius_and_bounds() {
        let m = esn_build(&EsnSpec::new(0.5, 0.1, 30, 9), 3).unwrap();
        assert!((spectral_radius(&m.w) - 0.5).abs() < 1e-9);
        assert!(m.w_in.as_slice().iter().all(|v| v.abs() <= 0.1));
        assert_eq!(m, esn_build(&EsnSpec::new(0.5, 0.1, 30, 9), 3).unwrap());
    }

    #[test]
    fn readout_fits_constant_and_linear_targets() {
        let m = esn_build(&EsnSpec::new(0.9, 0.5, 20, 4), 2).unwrap();
        let u = Matrix::from_vec(200, 2, (0..400).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect()).unwrap();
        let c = vec![2.75; 200];
        let t = esn_train_readout(&m, &u, &c, 20).unwrap();
        for p in &esn_predict(&t, &u).unwrap()[20..] {
            assert!((p - 2.75).abs() < 1e-8);
        }
        let lin: Vec<f64> = u.iter_rows().map(|r| 1.0 + 2.0 * r[0] - 0.5 * r[1]).collect();
        // the default ridge shrinks slightly; a vanishing one recovers the map
        let t = esn_train_readout(&m, &u, &lin, 20).unwrap();
        let p = esn_predict(&t, &u).unwrap();
        for i in 20..200 {
            assert!((p[i] - lin[i]).abs() < 1e-5, "{} vs {}", p[i], lin[i]);
        }
        let states = esn_run_states(&m, &u, None).unwrap();
        let fit = ReadoutFit { ridge_scale: 1e-14, ..ReadoutFit::new(20) };
        let t = esn_fit_readout(&m, &u, &states, &lin, 0..200, &fit).unwrap();
        let p = esn_readout(&t, &u, &states).unwrap();
        for i in 20..200 {
            assert!((p[i] - lin[i]).abs() < 1e-8, "{} vs {}", p[i], lin[i]);
        }
        assert_eq!(t.w, m.w);
        assert_eq!(t.w_in, m.w_in);
    }

    #[test]
    fn missing_inputs_are_held() {
        let u = Matrix::from_rows(&[vec![f64::NAN, 1.0], vec![2.0, f64::NAN], vec![3.0, 4.0]]).unwrap();
        let (f, held) = hold_missing(&u);
        assert_eq!(f.as_slice(), &[0.0, 1.0, 2.0, 1.0, 3.0, 4.0]);
        assert_eq!(held, vec![true, true, false]);
    }
}
