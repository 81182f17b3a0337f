//! Experiment configuration (TOML) and per-dataset presets.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    load_canonical, load_enea_pirelli, load_generic_csv, load_ucsd_mixtures, GenericSchema, SplitSpec,
    TimeSeriesDataset, UcsdMixture,
};
use crate::error::{Error, Result};
use crate::kernel::KernelId;
use crate::model::MethodKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loader {
    Enea,
    UcsdEthyleneCo,
    UcsdEthyleneMethane,
    Generic,
    Canonical,
}

impl FromStr for Loader {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "enea" | "enea-pirelli" | "airquality" => Ok(Loader::Enea),
            "ucsd-ethylene-co" | "ethylene-co" => Ok(Loader::UcsdEthyleneCo),
            "ucsd-ethylene-methane" | "ethylene-methane" => Ok(Loader::UcsdEthyleneMethane),
            "generic" => Ok(Loader::Generic),
            "canonical" => Ok(Loader::Canonical),
            other => Err(Error::Config(format!("unknown dataset loader {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub loader: Loader,
    pub path: PathBuf,
    /// Column schema, generic loader only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    /// Sensor channel subset; empty keeps all.
    #[serde(default)]
    pub channels: Vec<String>,
    /// Remove rows whose target is missing before splitting.
    #[serde(default)]
    pub drop_missing_targets: bool,
}

impl DatasetConfig {
    /// Parses `loader:path`.
    pub fn from_reference(r: &str) -> Result<Self> {
        let (loader, path) = r
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("dataset reference {r:?} must look like loader:path")))?;
        let loader: Loader = loader.parse()?;
        Ok(Self {
            loader,
            path: PathBuf::from(path),
            schema: None,
            channels: Vec::new(),
            drop_missing_targets: loader == Loader::Enea,
        })
    }

    pub fn load(&self) -> Result<TimeSeriesDataset> {
        match self.loader {
            Loader::Enea => load_enea_pirelli(&self.path),
            Loader::UcsdEthyleneCo => load_ucsd_mixtures(&self.path, UcsdMixture::EthyleneCo),
            Loader::UcsdEthyleneMethane => load_ucsd_mixtures(&self.path, UcsdMixture::EthyleneMethane),
            Loader::Canonical => load_canonical(&self.path),
            Loader::Generic => {
                let schema = self
                    .schema
                    .as_ref()
                    .ok_or_else(|| Error::Config("the generic loader needs a schema file".into()))?;
                load_generic_csv(&self.path, &GenericSchema::load(schema)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Repetitions {
    pub mlr: usize,
    pub mlp: usize,
    pub svr: usize,
    pub gpr: usize,
    pub esn: usize,
}

impl Default for Repetitions {
    fn default() -> Self {
        Self { mlr: 1, mlp: 30, svr: 1, gpr: 30, esn: 30 }
    }
}

impl Repetitions {
    pub fn of(&self, m: MethodKind) -> usize {
        match m {
            MethodKind::Mlr => self.mlr,
            MethodKind::Mlp => self.mlp,
            MethodKind::Svr => self.svr,
            MethodKind::Gpr => self.gpr,
            MethodKind::Esn => self.esn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpGrid {
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub learning_rate: f64,
}

impl Default for MlpGrid {
    fn default() -> Self {
        Self {
            hidden: vec![3, 5, 7, 10, 15, 20],
            epochs: vec![100, 200, 300, 400, 500, 600, 900],
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvrSearch {
    Full,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonUnits {
    /// Tube width in units of the training-target standard deviation.
    Standardized,
    /// Tube width in target units.
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvrGrid {
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub search: SvrSearch,
    pub epsilon_units: EpsilonUnits,
    pub tolerance: f64,
    pub cache_mb: usize,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self {
            gamma: powers_of_two(-15, 5),
            c: powers_of_two(-5, 15),
            epsilon: (1..=110).map(|i| i as f64 / 10.0).collect(),
            search: SvrSearch::Full,
            epsilon_units: EpsilonUnits::Standardized,
            tolerance: 1e-3,
            cache_mb: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GprGrid {
    pub kernels: Vec<KernelId>,
    pub optimize: bool,
}

impl Default for GprGrid {
    fn default() -> Self {
        Self { kernels: KernelId::ALL.to_vec(), optimize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsnGrid {
    pub spectral_radius: Vec<f64>,
    pub input_scaling: Vec<f64>,
    pub units: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub washout: Option<usize>,
}

impl Default for EsnGrid {
    fn default() -> Self {
        Self {
            spectral_radius: (1..=10).map(|i| i as f64 / 10.0).collect(),
            input_scaling: (1..=9).map(|i| i as f64 / 10.0).collect(),
            units: vec![10, 20, 30, 50, 100, 150, 200, 250],
            washout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
    pub target: String,
    /// `train-val-test` sample counts; the test count may be `rest`.
    pub splits: Vec<String>,
    /// Window durations with a unit suffix (`s`, `min`, `h`).
    pub tdl: Vec<String>,
    pub methods: Vec<MethodKind>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub repetitions: Repetitions,
    #[serde(default)]
    pub mlp: MlpGrid,
    #[serde(default)]
    pub svr: SvrGrid,
    #[serde(default)]
    pub gpr: GprGrid,
    #[serde(default)]
    pub esn: EsnGrid,
}

impl ExperimentConfig {
    /// Defaults for a loader: partitions and window lengths of the
    /// standard protocol for the two public archives.
    pub fn preset(dataset: DatasetConfig) -> Self {
        let (name, target, splits, tdl): (&str, &str, Vec<&str>, Vec<&str>) = match dataset.loader {
            Loader::Enea => (
                "enea",
                "CO",
                vec!["24-168-7482", "168-168-7338", "336-168-7170", "504-168-7002"],
                vec!["1h", "3h", "5h"],
            ),
            Loader::UcsdEthyleneCo | Loader::UcsdEthyleneMethane => (
                "ucsd",
                if dataset.loader == Loader::UcsdEthyleneCo { "CO" } else { "Methane" },
                vec!["1440-10080-30562", "10080-10080-21922", "20160-10080-11842", "30240-10080-1762"],
                vec!["1s", "5s", "10s", "30s", "60s"],
            ),
            Loader::Generic | Loader::Canonical => ("experiment", "", vec![], vec!["0.33min", "1min", "3min", "4min", "5min"]),
        };
        Self {
            name: name.into(),
            seed: 1,
            workers: 0,
            out: PathBuf::from("calibench-out"),
            target: target.into(),
            splits: splits.into_iter().map(String::from).collect(),
            tdl: tdl.into_iter().map(String::from).collect(),
            methods: MethodKind::ALL.to_vec(),
            dataset,
            repetitions: Repetitions::default(),
            mlp: MlpGrid::default(),
            svr: SvrGrid::default(),
            gpr: GprGrid::default(),
            esn: EsnGrid::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Overlays the keys present in `text` on top of `self`.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let over: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, over);
        base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.splits.is_empty() {
            return Err(Error::Config("no splits given".into()));
        }
        if self.target.is_empty() {
            return Err(Error::Config("no target given".into()));
        }
        for s in &self.splits {
            SplitEntry::parse(s)?;
        }
        for t in &self.tdl {
            parse_duration(t)?;
        }
        let empty = |name: &str, n: usize| -> Result<()> {
            if n == 0 {
                Err(Error::Config(format!("grid axis {name} is empty")))
            } else {
                Ok(())
            }
        };
        for m in &self.methods {
            match m {
                MethodKind::Mlp => {
                    empty("mlp.hidden", self.mlp.hidden.len())?;
                    empty("mlp.epochs", self.mlp.epochs.len())?;
                }
                MethodKind::Svr => {
                    empty("svr.gamma", self.svr.gamma.len())?;
                    empty("svr.c", self.svr.c.len())?;
                    empty("svr.epsilon", self.svr.epsilon.len())?;
                }
                MethodKind::Gpr => empty("gpr.kernels", self.gpr.kernels.len())?,
                MethodKind::Esn => {
                    empty("esn.spectral_radius", self.esn.spectral_radius.len())?;
                    empty("esn.input_scaling", self.esn.input_scaling.len())?;
                    empty("esn.units", self.esn.units.len())?;
                }
                MethodKind::Mlr => {}
            }
            if self.repetitions.of(*m) == 0 {
                return Err(Error::Config(format!("{m} has zero repetitions")));
            }
            if *m != MethodKind::Esn && self.tdl.is_empty() {
                return Err(Error::Config("no tapped-delay lengths given".into()));
            }
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// A split entry before the dataset length is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitEntry {
    pub train: usize,
    pub val: usize,
    /// `None` takes every remaining row.
    pub test: Option<usize>,
}

impl SplitEntry {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['-', ':']).map(str::trim).collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::Config(format!("bad split {s:?}")));
        match parts.as_slice() {
            [a, b, c] => Ok(Self {
                train: num(a)?,
                val: num(b)?,
                test: if c.eq_ignore_ascii_case("rest") { None } else { Some(num(c)?) },
            }),
            _ => Err(Error::Config(format!("split {s:?} must be train-val-test"))),
        }
    }

    pub fn resolve(&self, len: usize) -> Result<SplitSpec> {
        let test = match self.test {
            Some(t) => t,
            None => len
                .checked_sub(self.train + self.val)
                .filter(|t| *t > 0)
                .ok_or_else(|| Error::Config(format!("dataset of {len} rows leaves no test rows")))?,
        };
        let spec = SplitSpec::new(self.train, self.val, test);
        spec.ranges(len)?;
        Ok(spec)
    }
}

/// Seconds in a duration such as `10s`, `0.33min`, `3h`.
pub fn parse_duration(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    let (num, mult) = if let Some(v) = t.strip_suffix("min") {
        (v, 60.0)
    } else if let Some(v) = t.strip_suffix('h') {
        (v, 3600.0)
    } else if let Some(v) = t.strip_suffix('s') {
        (v, 1.0)
    } else {
        return Err(Error::Config(format!("duration {s:?} needs a unit suffix (s, min, h)")));
    };
    let v: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad duration {s:?}")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("duration {s:?} must be positive")));
    }
    Ok(v * mult)
}
