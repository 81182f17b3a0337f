use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::squared_distance;

/// Stationary covariance functions for Gaussian process regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    SquaredExponential,
    Matern32,
    Matern52,
}

impl KernelId {
    pub const ALL: [KernelId; 3] = [KernelId::SquaredExponential, KernelId::Matern32, KernelId::Matern52];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelId::SquaredExponential => "squared_exponential",
            KernelId::Matern32 => "matern32",
            KernelId::Matern52 => "matern52",
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "squared_exponential" | "squaredexponential" | "se" | "rbf" => Ok(KernelId::SquaredExponential),
            "matern32" | "matern_32" => Ok(KernelId::Matern32),
            "matern52" | "matern_52" => Ok(KernelId::Matern52),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Signal amplitude and length scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma_f: f64,
    pub length_scale: f64,
}

impl KernelParams {
    pub fn new(sigma_f: f64, length_scale: f64) -> Result<Self> {
        if !(sigma_f > 0.0 && length_scale > 0.0 && sigma_f.is_finite() && length_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel parameters must be positive (sigma_f={sigma_f}, length_scale={length_scale})"
            )));
        }
        Ok(Self { sigma_f, length_scale })
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

impl KernelId {
    /// Covariance as a function of the squared distance.
    #[inline]
    pub fn from_sq_dist(&self, p: &KernelParams, r2: f64) -> f64 {
        let sf2 = p.sigma_f * p.sigma_f;
        let l = p.length_scale;
        match self {
            KernelId::SquaredExponential => sf2 * (-0.5 * r2 / (l * l)).exp(),
            KernelId::Matern32 => {
                let z = SQRT3 * r2.sqrt() / l;
                sf2 * (1.0 + z) * (-z).exp()
            }
            KernelId::Matern52 => {
                let r = r2.sqrt();
                let z = SQRT5 * r / l;
                sf2 * (1.0 + z + 5.0 * r2 / (3.0 * l * l)) * (-z).exp()
            }
        }
    }

    /// Derivative of the covariance with respect to `log(length_scale)`.
    #[inline]
    pub(crate) fn d_log_length(&self, p: &KernelParams, r2: f64) -> f64 {
        let sf2 = p.sigma_f * p.sigma_f;
        let l = p.length_scale;
        match self {
            KernelId::SquaredExponential => sf2 * (-0.5 * r2 / (l * l)).exp() * r2 / (l * l),
            KernelId::Matern32 => {
                let z = SQRT3 * r2.sqrt() / l;
                sf2 * z * z * (-z).exp()
            }
            KernelId::Matern52 => {
                let z = SQRT5 * r2.sqrt() / l;
                sf2 * z * z * (1.0 + z) / 3.0 * (-z).exp()
            }
        }
    }
}

pub fn kernel_eval(id: KernelId, params: &KernelParams, x: &[f64], x2: &[f64]) -> Result<f64> {
    KernelParams::new(params.sigma_f, params.length_scale)?;
    if x.len() != x2.len() {
        return Err(Error::Dimension { expected: x.len(), got: x2.len() });
    }
    Ok(id.from_sq_dist(params, squared_distance(x, x2)))
}

/// `exp(-gamma |x - x'|^2)`, the SVR kernel.
#[inline]
pub fn rbf(gamma: f64, x: &[f64], x2: &[f64]) -> f64 {
    (-gamma * squared_distance(x, x2)).exp()
}
