//! Trained-model container: `key = value` header lines followed by
//! row-major numeric blocks. Every learned number lives in a block, so the
//! stored-parameter count of a model is the number of block values.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gpr_predict_mean, svr_predict, GprModel, KernelId, KernelParams, SvrModel};
use crate::linalg::Matrix;
use crate::linear::MlrModel;
use crate::neural::{esn_predict, EsnModel, MlpModel};
use crate::textfmt::{fmt_f64, parse_f64};

const MAGIC: &str = "calibench-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Mlr,
    Mlp,
    Svr,
    Gpr,
    Esn,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [MethodKind::Mlr, MethodKind::Mlp, MethodKind::Svr, MethodKind::Gpr, MethodKind::Esn];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Mlr => "mlr",
            MethodKind::Mlp => "mlp",
            MethodKind::Svr => "svr",
            MethodKind::Gpr => "gpr",
            MethodKind::Esn => "esn",
        }
    }

    /// Row label used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            MethodKind::Mlr => "MLR",
            MethodKind::Mlp => "NN",
            MethodKind::Svr => "SVR",
            MethodKind::Gpr => "GPR",
            MethodKind::Esn => "RC",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mlr" | "linear" => Ok(MethodKind::Mlr),
            "mlp" | "nn" => Ok(MethodKind::Mlp),
            "svr" => Ok(MethodKind::Svr),
            "gpr" | "gp" => Ok(MethodKind::Gpr),
            "esn" | "rc" => Ok(MethodKind::Esn),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Vectors print on one line; matrices one row per line.
    pub vector: bool,
    pub data: Vec<f64>,
}

/// Generic parsed form of the model text format.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    pub keys: Vec<(String, String)>,
    pub blocks: Vec<Block>,
}

impl Container {
    pub fn key(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.keys.push((k.to_string(), v.to_string()));
        self
    }

    pub fn vector(&mut self, name: &str, data: &[f64]) -> &mut Self {
        self.blocks.push(Block { name: name.into(), rows: 1, cols: data.len(), vector: true, data: data.to_vec() });
        self
    }

    pub fn matrix(&mut self, name: &str, m: &Matrix) -> &mut Self {
        self.blocks.push(Block {
            name: name.into(),
            rows: m.rows(),
            cols: m.cols(),
            vector: false,
            data: m.as_slice().to_vec(),
        });
        self
    }

    /// Number of values across all blocks.
    pub fn stored_count(&self) -> usize {
        self.blocks.iter().map(|b| b.data.len()).sum()
    }

    pub fn get(&self, k: &str) -> Result<&str> {
        self.keys
            .iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Structure(format!("model text lacks key {k:?}")))
    }

    pub fn get_f64(&self, k: &str) -> Result<f64> {
        let v = self.get(k)?;
        parse_f64(v).ok_or_else(|| Error::Structure(format!("key {k:?} is not a number: {v:?}")))
    }

    pub fn get_usize(&self, k: &str) -> Result<usize> {
        let v = self.get(k)?;
        v.parse().map_err(|_| Error::Structure(format!("key {k:?} is not a count: {v:?}")))
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::Structure(format!("model text lacks block {name:?}")))
    }

    pub fn get_vector(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.block(name)?.data.clone())
    }

    pub fn get_matrix(&self, name: &str) -> Result<Matrix> {
        let b = self.block(name)?;
        Matrix::from_vec(b.rows, b.cols, b.data.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        for (k, v) in &self.keys {
            let _ = writeln!(s, "{k} = {v}");
        }
        let join = |d: &[f64]| d.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ");
        for b in &self.blocks {
            if b.vector {
                let _ = writeln!(s, "vector {} {}", b.name, b.data.len());
                let _ = writeln!(s, "{}", join(&b.data));
            } else {
                let _ = writeln!(s, "matrix {} {} {}", b.name, b.rows, b.cols);
                for r in 0..b.rows {
                    let _ = writeln!(s, "{}", join(&b.data[r * b.cols..(r + 1) * b.cols]));
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(Error::parse(1, format!("expected header {MAGIC:?}"))),
        }
        let mut c = Container::default();
        let numbers = |line: usize, s: &str, want: usize| -> Result<Vec<f64>> {
            let v = s
                .split_whitespace()
                .map(|t| parse_f64(t).ok_or_else(|| Error::parse(line, format!("bad number {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != want {
                return Err(Error::parse(line, format!("expected {want} values, found {}", v.len())));
            }
            Ok(v)
        };
        let count = |line: usize, s: Option<&str>| -> Result<usize> {
            s.and_then(|t| t.parse().ok()).ok_or_else(|| Error::parse(line, "bad block size"))
        };
        while let Some((ln, line)) = lines.next() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("vector") => {
                    let name = parts.next().ok_or_else(|| Error::parse(ln, "block without name"))?.to_string();
                    let n = count(ln, parts.next())?;
                    let (dl, data) = lines.next().ok_or_else(|| Error::parse(ln, "truncated vector block"))?;
                    let data = numbers(dl, data, n)?;
                    c.blocks.push(Block { name, rows: 1, cols: n, vector: true, data });
                }
                Some("matrix") => {
                    let name = parts.next().ok_or_else(|| Error::parse(ln, "block without name"))?.to_string();
                    let rows = count(ln, parts.next())?;
                    let cols = count(ln, parts.next())?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (dl, row) = lines.next().ok_or_else(|| Error::parse(ln, "truncated matrix block"))?;
                        data.extend(numbers(dl, row, cols)?);
                    }
                    c.blocks.push(Block { name, rows, cols, vector: false, data });
                }
                _ => {
                    let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(ln, "expected key = value"))?;
                    c.keys.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mlr(MlrModel),
    Mlp(MlpModel),
    Svr(SvrModel),
    Gpr(GprModel),
    Esn(EsnModel),
}

impl TrainedModel {
    pub fn kind(&self) -> MethodKind {
        match self {
            TrainedModel::Mlr(_) => MethodKind::Mlr,
            TrainedModel::Mlp(_) => MethodKind::Mlp,
            TrainedModel::Svr(_) => MethodKind::Svr,
            TrainedModel::Gpr(_) => MethodKind::Gpr,
            TrainedModel::Esn(_) => MethodKind::Esn,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            TrainedModel::Mlr(m) => m.feature_dim(),
            TrainedModel::Mlp(m) => m.input_dim,
            TrainedModel::Svr(m) => m.input_dim(),
            TrainedModel::Gpr(m) => m.input_dim(),
            TrainedModel::Esn(m) => m.input_dim,
        }
    }

    /// Predictions for each row; the reservoir model treats rows as a
    /// sequence started from rest.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Mlr(m) => m.predict(x),
            TrainedModel::Mlp(m) => m.predict(x),
            TrainedModel::Svr(m) => svr_predict(m, x),
            TrainedModel::Gpr(m) => gpr_predict_mean(m, x),
            TrainedModel::Esn(m) => esn_predict(m, x),
        }
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::default();
        c.key("kind", self.kind());
        match self {
            TrainedModel::Mlr(m) => {
                c.key("feature_dim", m.feature_dim()).key("lambda", fmt_f64(m.lambda));
                c.vector("intercept", &[m.intercept]).vector("beta", &m.beta);
            }
            TrainedModel::Mlp(m) => {
                c.key("input_dim", m.input_dim).key("hidden", m.hidden).key("activation", "tanh");
                let w1 = Matrix::from_vec(m.hidden, m.input_dim, m.w1.clone()).expect("w1 shape");
                c.matrix("w1", &w1).vector("b1", &m.b1).vector("w2", &m.w2).vector("b2", &[m.b2]);
            }
            TrainedModel::Svr(m) => {
                let idx: Vec<String> = m.support_indices.iter().map(|i| i.to_string()).collect();
                c.key("input_dim", m.input_dim())
                    .key("gamma", fmt_f64(m.gamma))
                    .key("c", fmt_f64(m.c))
                    .key("epsilon", fmt_f64(m.epsilon))
                    .key("n_sv", m.n_support())
                    .key("support_indices", idx.join(","));
                c.matrix("support_vectors", &m.support_vectors)
                    .vector("dual_coef", &m.dual_coef)
                    .vector("bias", &[m.bias]);
            }
            TrainedModel::Gpr(m) => {
                c.key("kernel", m.kernel).key("jitter", fmt_f64(m.jitter));
                c.matrix("train_x", &m.train_x)
                    .vector("alpha", &m.alpha)
                    .vector("hyper", &[m.params.sigma_f, m.params.length_scale, m.noise_std, m.beta]);
            }
            TrainedModel::Esn(m) => {
                c.key("input_dim", m.input_dim)
                    .key("units", m.units())
                    .key("spectral_radius", fmt_f64(m.spectral_radius))
                    .key("input_scaling", fmt_f64(m.input_scaling))
                    .key("leaking_rate", fmt_f64(m.leaking_rate))
                    .key("seed", m.seed);
                c.matrix("w_in", &m.w_in).matrix("w", &m.w).vector("w_out", &m.w_out);
            }
        }
        c
    }

    pub fn to_text(&self) -> String {
        self.to_container().to_text()
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let kind: MethodKind = c.get("kind")?.parse()?;
        let one = |name: &str| -> Result<f64> {
            let v = c.get_vector(name)?;
            if v.len() != 1 {
                return Err(Error::Structure(format!("block {name:?} must hold one value")));
            }
            Ok(v[0])
        };
        let model = match kind {
            MethodKind::Mlr => {
                let beta = c.get_vector("beta")?;
                if beta.len() != c.get_usize("feature_dim")? {
                    return Err(Error::Structure("beta length differs from feature_dim".into()));
                }
                TrainedModel::Mlr(MlrModel { beta, intercept: one("intercept")?, lambda: c.get_f64("lambda")? })
            }
            MethodKind::Mlp => {
                let (n, k) = (c.get_usize("input_dim")?, c.get_usize("hidden")?);
                let w1 = c.get_matrix("w1")?;
                let (b1, w2) = (c.get_vector("b1")?, c.get_vector("w2")?);
                if w1.rows() != k || w1.cols() != n || b1.len() != k || w2.len() != k {
                    return Err(Error::Structure("MLP block shapes disagree with dimensions".into()));
                }
                TrainedModel::Mlp(MlpModel { input_dim: n, hidden: k, w1: w1.into_vec(), b1, w2, b2: one("b2")? })
            }
            MethodKind::Svr => {
                let sv = c.get_matrix("support_vectors")?;
                let dual_coef = c.get_vector("dual_coef")?;
                let idx = c.get("support_indices")?;
                let support_indices = if idx.is_empty() {
                    Vec::new()
                } else {
                    idx.split(',')
                        .map(|t| t.trim().parse().map_err(|_| Error::Structure(format!("bad support index {t:?}"))))
                        .collect::<Result<Vec<usize>>>()?
                };
                if sv.rows() != dual_coef.len() || support_indices.len() != dual_coef.len() {
                    return Err(Error::Structure("support vector count mismatch".into()));
                }
                let support_vectors = if sv.rows() == 0 { Matrix::zeros(0, c.get_usize("input_dim")?) } else { sv };
                TrainedModel::Svr(SvrModel {
                    support_vectors,
                    dual_coef,
                    bias: one("bias")?,
                    gamma: c.get_f64("gamma")?,
                    c: c.get_f64("c")?,
                    epsilon: c.get_f64("epsilon")?,
                    support_indices,
                })
            }
            MethodKind::Gpr => {
                let kernel: KernelId = c.get("kernel")?.parse()?;
                let h = c.get_vector("hyper")?;
                if h.len() != 4 {
                    return Err(Error::Structure("GPR hyper block must hold 4 values".into()));
                }
                TrainedModel::Gpr(GprModel::from_parts(
                    c.get_matrix("train_x")?,
                    c.get_vector("alpha")?,
                    kernel,
                    KernelParams::new(h[0], h[1])?,
                    h[2],
                    h[3],
                    c.get_f64("jitter")?,
                )?)
            }
            MethodKind::Esn => {
                let (nu, nx) = (c.get_usize("input_dim")?, c.get_usize("units")?);
                let w_in = c.get_matrix("w_in")?;
                let w = c.get_matrix("w")?;
                let w_out = c.get_vector("w_out")?;
                if w_in.rows() != nx || w_in.cols() != 1 + nu || w.rows() != nx || w.cols() != nx {
                    return Err(Error::Structure("ESN block shapes disagree with dimensions".into()));
                }
                if !w_out.is_empty() && w_out.len() != 1 + nu + nx {
                    return Err(Error::Structure("ESN readout length mismatch".into()));
                }
                let seed = c.get("seed")?.parse().map_err(|_| Error::Structure("bad seed".into()))?;
                TrainedModel::Esn(EsnModel {
                    input_dim: nu,
                    w_in,
                    w,
                    w_out,
                    spectral_radius: c.get_f64("spectral_radius")?,
                    input_scaling: c.get_f64("input_scaling")?,
                    leaking_rate: c.get_f64("leaking_rate")?,
                    seed,
                })
            }
        };
        Ok(model)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_container(&Container::parse(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlr_round_trip_is_exact() {
        let m = TrainedModel::Mlr(MlrModel { beta: vec![0.1, -1.0 / 3.0], intercept: 1e-17, lambda: 0.0 });
        let t = m.to_text();
        assert_eq!(TrainedModel::from_text(&t).unwrap(), m);
        assert_eq!(Container::parse(&t).unwrap().stored_count(), 3);
    }

    #[test]
    fn empty_svr_round_trip() {
        let m = TrainedModel::Svr(SvrModel {
            support_vectors: Matrix::zeros(0, 3),
            dual_coef: vec![],
            bias: 2.5,
            gamma: 0.25,
            c: 4.0,
            epsilon: 0.1,
            support_indices: vec![],
        });
        let back = TrainedModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_container().stored_count(), 1);
    }

    #[test]
    fn rejects_truncated_text() {
        let m = TrainedModel::Mlp(MlpModel::random(3, 2, 1));
        let t = m.to_text();
        let cut: String = t.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(TrainedModel::from_text(&cut).is_err());
        assert!(TrainedModel::from_text("nonsense").is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("NN".parse::<MethodKind>().unwrap(), MethodKind::Mlp);
        assert_eq!("rc".parse::<MethodKind>().unwrap(), MethodKind::Esn);
        assert!("tree".parse::<MethodKind>().is_err());
    }
}
