//! Storage and per-prediction cost of trained models.

use crate::kernel::KernelId;
use crate::model::{MethodKind, TrainedModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FootprintReport {
    pub kind: MethodKind,
    /// Learned numbers the model must keep to predict.
    pub stored: usize,
    /// Multiply-accumulates per prediction.
    pub macs: usize,
    /// Transcendental evaluations (tanh, exp, sqrt) per prediction.
    pub nonlinear: usize,
    pub class: &'static str,
}

pub fn mlr_stored(p: usize) -> usize {
    p + 1
}

pub fn mlp_stored(n: usize, k: usize) -> usize {
    k * n + 2 * k + 1
}

pub fn svr_stored(n_sv: usize, d: usize) -> usize {
    n_sv * (d + 1) + 1
}

/// Training inputs and weights plus amplitude, length scale, noise and offset.
pub fn gpr_stored(n: usize, d: usize) -> usize {
    n * (d + 1) + 4
}

pub fn esn_stored(nx: usize, nu: usize) -> usize {
    nx * (1 + nu) + nx * nx + (1 + nu + nx)
}

pub fn footprint(m: &TrainedModel) -> FootprintReport {
    let kind = m.kind();
    match m {
        TrainedModel::Mlr(m) => {
            let p = m.feature_dim();
            FootprintReport { kind, stored: mlr_stored(p), macs: p, nonlinear: 0, class: "O(p)" }
        }
        TrainedModel::Mlp(m) => {
            let (n, k) = (m.input_dim, m.hidden);
            FootprintReport { kind, stored: mlp_stored(n, k), macs: k * n + k, nonlinear: k, class: "O(nk)" }
        }
        TrainedModel::Svr(m) => {
            let (s, d) = (m.n_support(), m.input_dim());
            FootprintReport { kind, stored: svr_stored(s, d), macs: s * (d + 1), nonlinear: s, class: "O(n_SV d)" }
        }
        TrainedModel::Gpr(m) => {
            let (n, d) = (m.n_train(), m.input_dim());
            let per = if m.kernel == KernelId::SquaredExponential { 1 } else { 2 };
            FootprintReport { kind, stored: gpr_stored(n, d), macs: n * (d + 1), nonlinear: per * n, class: "O(nd)" }
        }
        TrainedModel::Esn(m) => {
            let (nx, nu) = (m.units(), m.input_dim);
            let leak = if m.leaking_rate == 1.0 { 0 } else { 2 * nx };
            FootprintReport {
                kind,
                stored: esn_stored(nx, nu),
                macs: nx * (nu + nx) + (nu + nx) + leak,
                nonlinear: nx,
                class: "O(N_x^2)",
            }
        }
    }
}
