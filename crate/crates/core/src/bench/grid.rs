//! Hyperparameter tuples and grid expansion.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::config::{ExperimentConfig, SvrGrid};
use crate::error::{Error, Result};
use crate::kernel::KernelId;
use crate::model::MethodKind;
use crate::textfmt::{fmt_f64, parse_f64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperTuple {
    Mlr,
    Mlp { hidden: usize, epochs: usize },
    Svr { gamma: f64, c: f64, epsilon: f64 },
    Gpr { kernel: KernelId },
    Esn { spectral_radius: f64, input_scaling: f64, units: usize },
}

impl HyperTuple {
    pub fn method(&self) -> MethodKind {
        match self {
            HyperTuple::Mlr => MethodKind::Mlr,
            HyperTuple::Mlp { .. } => MethodKind::Mlp,
            HyperTuple::Svr { .. } => MethodKind::Svr,
            HyperTuple::Gpr { .. } => MethodKind::Gpr,
            HyperTuple::Esn { .. } => MethodKind::Esn,
        }
    }

    /// Lexicographic order over the tuple fields, used as the last tie-break.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let key = |t: &Self| -> Vec<f64> {
            match *t {
                HyperTuple::Mlr => vec![],
                HyperTuple::Mlp { hidden, epochs } => vec![hidden as f64, epochs as f64],
                HyperTuple::Svr { gamma, c, epsilon } => vec![gamma, c, epsilon],
                HyperTuple::Gpr { kernel } => vec![KernelId::ALL.iter().position(|k| *k == kernel).unwrap_or(0) as f64],
                HyperTuple::Esn { spectral_radius, input_scaling, units } => {
                    vec![spectral_radius, input_scaling, units as f64]
                }
            }
        };
        self.method()
            .cmp(&other.method())
            .then_with(|| {
                key(self)
                    .iter()
                    .zip(key(other).iter())
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

impl fmt::Display for HyperTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperTuple::Mlr => f.write_str("-"),
            HyperTuple::Mlp { hidden, epochs } => write!(f, "hidden={hidden};epochs={epochs}"),
            HyperTuple::Svr { gamma, c, epsilon } => {
                write!(f, "gamma={};c={};epsilon={}", fmt_f64(*gamma), fmt_f64(*c), fmt_f64(*epsilon))
            }
            HyperTuple::Gpr { kernel } => write!(f, "kernel={kernel}"),
            HyperTuple::Esn { spectral_radius, input_scaling, units } => write!(
                f,
                "rho={};is={};units={units}",
                fmt_f64(*spectral_radius),
                fmt_f64(*input_scaling)
            ),
        }
    }
}

impl HyperTuple {
    pub fn parse(method: MethodKind, s: &str) -> Result<Self> {
        if method == MethodKind::Mlr {
            return Ok(HyperTuple::Mlr);
        }
        let bad = || Error::parse(0, format!("bad {method} hyperparameters {s:?}"));
        let mut fields = std::collections::BTreeMap::new();
        for part in s.split(';') {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            fields.insert(k.trim(), v.trim());
        }
        let num = |k: &str| fields.get(k).and_then(|v| parse_f64(v)).ok_or_else(bad);
        let int = |k: &str| fields.get(k).and_then(|v| v.parse::<usize>().ok()).ok_or_else(bad);
        Ok(match method {
            MethodKind::Mlr => HyperTuple::Mlr,
            MethodKind::Mlp => HyperTuple::Mlp { hidden: int("hidden")?, epochs: int("epochs")? },
            MethodKind::Svr => HyperTuple::Svr { gamma: num("gamma")?, c: num("c")?, epsilon: num("epsilon")? },
            MethodKind::Gpr => HyperTuple::Gpr { kernel: KernelId::from_str(fields.get("kernel").ok_or_else(bad)?)? },
            MethodKind::Esn => HyperTuple::Esn {
                spectral_radius: num("rho")?,
                input_scaling: num("is")?,
                units: int("units")?,
            },
        })
    }
}

fn svr_product(g: &SvrGrid, gi: &[usize], ci: &[usize], ei: &[usize]) -> Vec<HyperTuple> {
    let mut out = Vec::with_capacity(gi.len() * ci.len() * ei.len());
    for &a in gi {
        for &b in ci {
            for &e in ei {
                out.push(HyperTuple::Svr { gamma: g.gamma[a], c: g.c[b], epsilon: g.epsilon[e] });
            }
        }
    }
    out
}

/// Full Cartesian product in axis order (outer axis first).
pub fn expand_grid(cfg: &ExperimentConfig, method: MethodKind) -> Result<Vec<HyperTuple>> {
    let nonempty = |name: &str, n: usize| -> Result<()> {
        if n == 0 {
            Err(Error::Config(format!("grid axis {name} is empty")))
        } else {
            Ok(())
        }
    };
    let out: Vec<HyperTuple> = match method {
        MethodKind::Mlr => vec![HyperTuple::Mlr],
        MethodKind::Mlp => {
            nonempty("mlp.hidden", cfg.mlp.hidden.len())?;
            nonempty("mlp.epochs", cfg.mlp.epochs.len())?;
            cfg.mlp
                .hidden
                .iter()
                .flat_map(|&h| cfg.mlp.epochs.iter().map(move |&e| HyperTuple::Mlp { hidden: h, epochs: e }))
                .collect()
        }
        MethodKind::Svr => {
            let g = &cfg.svr;
            nonempty("svr.gamma", g.gamma.len())?;
            nonempty("svr.c", g.c.len())?;
            nonempty("svr.epsilon", g.epsilon.len())?;
            let all = |n: usize| (0..n).collect::<Vec<_>>();
            svr_product(g, &all(g.gamma.len()), &all(g.c.len()), &all(g.epsilon.len()))
        }
        MethodKind::Gpr => {
            nonempty("gpr.kernels", cfg.gpr.kernels.len())?;
            cfg.gpr.kernels.iter().map(|&k| HyperTuple::Gpr { kernel: k }).collect()
        }
        MethodKind::Esn => {
            let g = &cfg.esn;
            nonempty("esn.spectral_radius", g.spectral_radius.len())?;
            nonempty("esn.input_scaling", g.input_scaling.len())?;
            nonempty("esn.units", g.units.len())?;
            let mut v = Vec::new();
            for &r in &g.spectral_radius {
                for &s in &g.input_scaling {
                    for &u in &g.units {
                        v.push(HyperTuple::Esn { spectral_radius: r, input_scaling: s, units: u });
                    }
                }
            }
            v
        }
    };
    Ok(out)
}

/// Index strides of the coarse SVR stage: every other gamma and C (powers
/// of four on the default grid) and every tenth epsilon.
pub const COARSE_STRIDE: [usize; 3] = [2, 2, 10];

fn strided(n: usize, stride: usize) -> Vec<usize> {
    (0..n).step_by(stride).collect()
}

pub fn svr_coarse_grid(g: &SvrGrid) -> Vec<HyperTuple> {
    svr_product(
        g,
        &strided(g.gamma.len(), COARSE_STRIDE[0]),
        &strided(g.c.len(), COARSE_STRIDE[1]),
        &strided(g.epsilon.len(), COARSE_STRIDE[2]),
    )
}

/// Full-grid neighbours of a coarse optimum: within half a stride on each
/// axis (one exponent for gamma and C, five epsilon steps).
pub fn svr_refine_grid(g: &SvrGrid, best: &HyperTuple) -> Vec<HyperTuple> {
    let HyperTuple::Svr { gamma, c, epsilon } = *best else {
        return Vec::new();
    };
    let around = |axis: &[f64], v: f64, stride: usize| -> Vec<usize> {
        let Some(i) = axis.iter().position(|a| *a == v) else { return Vec::new() };
        let r = stride.div_ceil(2);
        (i.saturating_sub(r)..=(i + r).min(axis.len() - 1)).collect()
    };
    svr_product(
        g,
        &around(&g.gamma, gamma, COARSE_STRIDE[0]),
        &around(&g.c, c, COARSE_STRIDE[1]),
        &around(&g.epsilon, epsilon, COARSE_STRIDE[2]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::DatasetConfig;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::preset(DatasetConfig::from_reference("enea:x.csv").unwrap())
    }

    #[test]
    fn default_counts() {
        let c = cfg();
        assert_eq!(expand_grid(&c, MethodKind::Mlp).unwrap().len(), 42);
        assert_eq!(expand_grid(&c, MethodKind::Esn).unwrap().len(), 720);
        assert_eq!(expand_grid(&c, MethodKind::Svr).unwrap().len(), 21 * 21 * 110);
        assert_eq!(expand_grid(&c, MethodKind::Gpr).unwrap().len(), 3);
        assert_eq!(expand_grid(&c, MethodKind::Mlr).unwrap(), vec![HyperTuple::Mlr]);
    }

    #[test]
    fn single_value_axes() {
        let mut c = cfg();
        c.mlp.hidden = vec![5];
        c.mlp.epochs = vec![100];
        assert_eq!(expand_grid(&c, MethodKind::Mlp).unwrap().len(), 1);
        c.mlp.epochs.clear();
        assert!(expand_grid(&c, MethodKind::Mlp).is_err());
    }

    #[test]
    fn tuple_text_round_trip() {
        for m in MethodKind::ALL {
            for t in expand_grid(&cfg(), m).unwrap().iter().take(50) {
                assert_eq!(HyperTuple::parse(m, &t.to_string()).unwrap(), *t);
            }
        }
    }

    #[test]
    fn two_stage_sizes() {
        let g = cfg().svr;
        let coarse = svr_coarse_grid(&g);
        assert_eq!(coarse.len(), 11 * 11 * 11);
        let HyperTuple::Svr { gamma, .. } = coarse[0] else { panic!() };
        assert_eq!(gamma, 2f64.powi(-15));
        let mid = HyperTuple::Svr { gamma: 1.0, c: 1.0, epsilon: 5.1 };
        assert_eq!(svr_refine_grid(&g, &mid).len(), 3 * 3 * 11);
        let edge = HyperTuple::Svr { gamma: 2f64.powi(-15), c: 2f64.powi(15), epsilon: 0.1 };
        assert_eq!(svr_refine_grid(&g, &edge).len(), 2 * 2 * 6);
    }
}
