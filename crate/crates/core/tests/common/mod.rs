#![allow(dead_code)]

use std::path::Path;

use calibench::bench::{DatasetConfig, ExperimentConfig, Loader};
use calibench::dataset::{TargetSeries, TimeSeriesDataset};
use calibench::kernel::KernelId;
use calibench::{Matrix, MethodKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| r.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

/// Sensor array with a first-order lagged response to a piecewise
/// concentration profile, sampled every second.
pub fn synthetic_dataset(rows: usize, seed: u64) -> TimeSeriesDataset {
    let mut r = rng(seed);
    let mut level = 0.0;
    let mut conc = Vec::with_capacity(rows);
    let mut s = [0.0f64; 3];
    let mut data = Vec::with_capacity(rows * 3);
    for t in 0..rows {
        if t % 40 == 0 {
            level = r.gen_range(0.0..5.0);
        }
        let c = level + 0.3 * (t as f64 / 7.0).sin();
        conc.push(c);
        s[0] += 0.4 * (c - s[0]);
        s[1] += 0.15 * (0.5 * c * c - s[1]);
        s[2] = r.gen_range(-1.0..1.0);
        for v in s {
            data.push(v + r.gen_range(-0.02..0.02));
        }
    }
    TimeSeriesDataset::new(
        "synthetic",
        1.0,
        vec!["s1".into(), "s2".into(), "noise".into()],
        vec!["a.u.".into(); 3],
        Matrix::from_vec(rows, 3, data).unwrap(),
        vec![TargetSeries::new("CO", "ppm", conc)],
    )
    .unwrap()
}

/// Small grids so that a full run takes seconds.
pub fn mini_config(out: &Path, methods: &[MethodKind], splits: &[&str], tdl: &[&str]) -> ExperimentConfig {
    let ds = DatasetConfig {
        loader: Loader::Canonical,
        path: out.join("unused.csv"),
        schema: None,
        channels: vec![],
        drop_missing_targets: false,
    };
    let mut cfg = ExperimentConfig::preset(ds);
    cfg.target = "CO".into();
    cfg.out = out.to_path_buf();
    cfg.methods = methods.to_vec();
    cfg.splits = splits.iter().map(|s| s.to_string()).collect();
    cfg.tdl = tdl.iter().map(|s| s.to_string()).collect();
    cfg.workers = 2;
    cfg.repetitions.mlp = 2;
    cfg.repetitions.gpr = 2;
    cfg.repetitions.esn = 2;
    cfg.mlp.hidden = vec![3, 5];
    cfg.mlp.epochs = vec![40];
    cfg.svr.gamma = vec![0.1, 0.5];
    cfg.svr.c = vec![1.0, 8.0];
    cfg.svr.epsilon = vec![0.1];
    cfg.gpr.kernels = vec![KernelId::Matern32];
    cfg.esn.spectral_radius = vec![0.5, 0.9];
    cfg.esn.input_scaling = vec![0.5];
    cfg.esn.units = vec![15];
    cfg
}

pub const REPORT_FILES: [&str; 6] =
    ["table2.csv", "table2.txt", "table3.csv", "table3.txt", "mae_vs_tdl.csv", "mae_vs_tsl.csv"];

pub fn report_bytes(out: &Path) -> Vec<Vec<u8>> {
    REPORT_FILES
        .iter()
        .chain(std::iter::once(&"sv_scatter.csv"))
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect()
}
