mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use calibench::bench::{load_all_records, run_experiment_on, RunOptions, Stage, SvrSearch};
use calibench::dataset::{write_canonical, TargetSeries, TimeSeriesDataset};
use calibench::eval::compute_mae;
use calibench::linear::{fit_mlr, RidgeSpec};
use calibench::MethodKind;
use common::*;

fn opts() -> RunOptions {
    RunOptions::default()
}

#[test]
fn single_mlr_cell_matches_direct_fit() {
    let ds = synthetic_dataset(100, 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path(), &[MethodKind::Mlr], &["60-20-20"], &["1s"]);
    let s = run_experiment_on(&cfg, ds.clone(), &opts()).unwrap();
    assert_eq!(s.report.cells.len(), 1);
    let x = ds.channels();
    let y = &ds.target("CO").unwrap().values;
    let m = fit_mlr(&x.slice_rows(0, 60), &y[..60], RidgeSpec::NONE).unwrap();
    let pred = m.predict(&x.slice_rows(80, 100)).unwrap();
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let direct = compute_mae(&pred, &y[80..], None, hi - lo).unwrap().mae;
    let got = s.report.cells[0].summary.test_mae_mean;
    assert!((got - direct).abs() < 1e-9, "{got} vs {direct}");
}

fn selected(out: &Path) -> Vec<(String, String)> {
    let text = fs::read_to_string(out.join("table2.csv")).unwrap();
    text.lines().skip(1).map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        (format!("{}_{}_{}", f[0], f[2], f[4]), f[6].to_string())
    }).collect()
}

#[test]
fn test_targets_never_influence_selection() {
    let ds = synthetic_dataset(360, 2);
    let methods = [MethodKind::Mlp, MethodKind::Svr, MethodKind::Esn];
    let a = tempfile::tempdir().unwrap();
    let cfg = mini_config(a.path(), &methods, &["160-100-100"], &["1s", "3s"]);
    let before = run_experiment_on(&cfg, ds.clone(), &opts()).unwrap();

    let mut y = ds.target("CO").unwrap().values.clone();
    let mut r = rng(9);
    for v in &mut y[260..] {
        *v += rand::Rng::gen_range(&mut r, -50.0..50.0);
    }
    let mutated = TimeSeriesDataset::new(
        "mutated",
        ds.sampling_period,
        ds.channel_names().to_vec(),
        ds.channel_units().to_vec(),
        ds.channels().clone(),
        vec![TargetSeries::new("CO", "ppm", y)],
    )
    .unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_b = mini_config(b.path(), &methods, &["160-100-100"], &["1s", "3s"]);
    let after = run_experiment_on(&cfg_b, mutated, &opts()).unwrap();

    assert_eq!(selected(a.path()), selected(b.path()));
    let tests_a: Vec<f64> = before.report.cells.iter().map(|c| c.summary.test_mae_mean).collect();
    let tests_b: Vec<f64> = after.report.cells.iter().map(|c| c.summary.test_mae_mean).collect();
    assert_ne!(tests_a, tests_b, "mutation should reach the test metrics");
}

#[test]
fn interrupted_run_resumes_to_identical_report() {
    let ds = synthetic_dataset(320, 3);
    let methods = [MethodKind::Mlr, MethodKind::Mlp, MethodKind::Gpr, MethodKind::Esn];
    let whole = tempfile::tempdir().unwrap();
    let cfg = mini_config(whole.path(), &methods, &["140-80-100"], &["1s", "2s"]);
    let first = run_experiment_on(&cfg, ds.clone(), &opts()).unwrap();
    let reference = report_bytes(whole.path());

    let part = tempfile::tempdir().unwrap();
    let cfg_p = mini_config(part.path(), &methods, &["140-80-100"], &["1s", "2s"]);
    run_experiment_on(&cfg_p, ds.clone(), &opts()).unwrap();
    // simulate a kill: keep half of every trial log plus a torn line, drop all report output
    for entry in fs::read_dir(part.path().join("cells")).unwrap() {
        let dir = entry.unwrap().path();
        let log = dir.join("trials.csv");
        let text = fs::read_to_string(&log).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let keep = 1 + (lines.len() - 1) / 2;
        let mut cut = lines[..keep].join("\n");
        cut.push('\n');
        cut.push_str("mlp,140-80-100,14");
        fs::write(&log, cut).unwrap();
        let _ = fs::remove_dir_all(dir.join("winner"));
    }
    for f in REPORT_FILES {
        fs::remove_file(part.path().join(f)).unwrap();
    }
    let resumed = run_experiment_on(&cfg_p, ds, &opts()).unwrap();
    assert!(resumed.trials_reused > 0 && resumed.trials_run > 0);
    assert_eq!(resumed.trials_run + resumed.trials_reused, first.trials_run);
    assert_eq!(report_bytes(part.path()), reference);
}

#[test]
fn every_trial_has_its_own_seed() {
    let ds = synthetic_dataset(300, 4);
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path(), &MethodKind::ALL, &["120-80-100", "160-40-rest"], &["1s", "2s"]);
    run_experiment_on(&cfg, ds, &opts()).unwrap();
    let recs = load_all_records(dir.path()).unwrap();
    let seeds: HashSet<u64> = recs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), recs.len());
    assert!(recs.iter().all(|r| r.is_ok()), "{:?}", recs.iter().find(|r| !r.is_ok()).map(|r| &r.message));
}

#[test]
fn report_csv_reproduces_aggregates() {
    let ds = synthetic_dataset(300, 5);
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path(), &[MethodKind::Mlp, MethodKind::Gpr, MethodKind::Svr], &["150-75-75"], &["1s", "5s"]);
    let s = run_experiment_on(&cfg, ds, &opts()).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("table2.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), s.report.cells.len());
    for (row, cell) in rows.iter().zip(&s.report.cells) {
        let c = &cell.summary;
        let num = |name: &str| row[col(name)].parse::<f64>().unwrap();
        for (name, v) in [
            ("val_mae_mean", c.val_mae_mean),
            ("test_mae_mean", c.test_mae_mean),
            ("test_mae_std", c.test_mae_std),
            ("test_mae_min", c.test_mae_min),
            ("test_mae_valbest", c.test_mae_valbest),
            ("relative_mae", c.relative_mae),
            ("stored_mean", c.stored_mean),
        ] {
            assert!((num(name) - v).abs() <= 1e-12 * v.abs().max(1.0), "{name}");
        }
        assert_eq!(&row[col("tuple")], c.tuple.as_str());
    }
}

#[test]
fn two_stage_search_refines_around_coarse_winner() {
    let ds = synthetic_dataset(260, 6);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini_config(dir.path(), &[MethodKind::Svr], &["120-70-70"], &["1s"]);
    cfg.svr.gamma = (-4..=2).map(|e| 2f64.powi(e)).collect();
    cfg.svr.c = (-2..=4).map(|e| 2f64.powi(e)).collect();
    cfg.svr.epsilon = vec![0.05, 0.1];
    cfg.svr.search = SvrSearch::TwoStage;
    run_experiment_on(&cfg, ds, &opts()).unwrap();
    let recs = load_all_records(dir.path()).unwrap();
    let coarse = recs.iter().filter(|r| r.stage == Stage::Coarse).count();
    let refine = recs.iter().filter(|r| r.stage == Stage::Refine).count();
    assert_eq!(coarse, 4 * 4 * 1);
    assert!(refine > 0 && coarse + refine < 7 * 7 * 2);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_calibench"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    write_canonical(&synthetic_dataset(200, 8), &csv).unwrap();
    let dataset = format!("canonical:{}", csv.display());
    let config = dir.path().join("exp.toml");
    fs::write(&config, "target = \"CO\"\n[mlp]\nhidden = [3]\nepochs = [20]\n[repetitions]\nmlp = 1\n").unwrap();

    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["run", "--no-such-flag"]), 1);
    assert_eq!(code(&["run", "--dataset", "canonical:/definitely/missing.csv", "--target", "CO", "--tsl", "10-10-10"]), 2);

    let out = dir.path().join("ok");
    let ok = [
        "run", "--dataset", &dataset, "--config", config.to_str().unwrap(), "--methods", "mlr,mlp",
        "--tsl", "100-50-50", "--tdl", "1s,2s", "--out", out.to_str().unwrap(), "-q",
    ];
    assert_eq!(code(&ok), 0);
    assert!(out.join("table2.csv").exists());
    assert_eq!(code(&["report", "--out", out.to_str().unwrap()]), 0);
    assert_eq!(code(&["dynamics", "--out", out.to_str().unwrap()]), 0);
    assert!(out.join("transient.csv").exists());
    let fp = cli().args(["footprint", "--out", out.to_str().unwrap()]).output().unwrap();
    assert!(String::from_utf8_lossy(&fp.stdout).lines().count() >= 5);

    let short = dir.path().join("short");
    let incomplete = [
        "run", "--dataset", &dataset, "--target", "CO", "--methods", "mlr", "--tsl", "10-10-rest",
        "--tdl", "60s", "--out", short.to_str().unwrap(), "-q",
    ];
    assert_eq!(code(&incomplete), 3);
}
