//! Trial scheduling, fitting, evaluation and artifact persistence.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::{parse_duration, EpsilonUnits, ExperimentConfig, SplitEntry, SvrSearch};
use super::grid::{expand_grid, svr_coarse_grid, svr_refine_grid, HyperTuple};
use super::records::{cell_dir_name, read_records, RecordWriter, Stage, TrialRecord, TrialStatus, TRIALS_FILE};
use super::report::{build_report, emit_report, BenchmarkReport};
use super::select::{select_best, summarize};
use crate::dataset::{
    standardize, tapped_delay_rows, ScalarScaler, SplitSpec, StandardizationParams, TappedDelayConfig,
    TappedDelayView, TargetPolicy, TemporalSplit, TimeSeriesDataset,
};
use crate::error::{Error, Result};
use crate::eval::{compute_mae, footprint, observed_range};
use crate::kernel::{gpr_fit, svr_fit, GprSpec, SvrParams};
use crate::linalg::{sample_std, Matrix};
use crate::linear::{fit_mlr, RidgeSpec};
use crate::model::{Container, MethodKind, TrainedModel};
use crate::neural::{
    esn_build, esn_fit_readout, esn_readout, esn_run_states, hold_missing, mlp_train, EsnSpec, MlpTrainSpec,
    ReadoutFit,
};
use crate::rng::{derive_seed, substream};
use crate::textfmt::fmt_f64;

pub const CELLS_DIR: &str = "cells";
pub const WINNER_DIR: &str = "winner";
pub const RUN_META: &str = "run.meta";
pub const CONFIG_FILE: &str = "config.toml";

/// Target series and sensors after target selection, channel subsetting
/// and optional removal of rows without a reference value.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub dataset: TimeSeriesDataset,
    pub target_name: String,
    pub target_unit: String,
    pub target: Vec<f64>,
    /// Observed target range over the whole series.
    pub range: f64,
    pub dropped_rows: usize,
}

pub fn prepare_dataset(cfg: &ExperimentConfig, ds: TimeSeriesDataset) -> Result<PreparedDataset> {
    let ds = if cfg.dataset.channels.is_empty() { ds } else { ds.select_channels(&cfg.dataset.channels)? };
    let (ds, dropped) = if cfg.dataset.drop_missing_targets {
        ds.drop_rows_missing_target(&cfg.target)?
    } else {
        (ds, 0)
    };
    let t = ds.target(&cfg.target)?.clone();
    let range = observed_range(&t.values);
    if !range.is_finite() {
        return Err(Error::Empty(format!("target {} has no observed values", t.name)));
    }
    Ok(PreparedDataset {
        target_name: t.name,
        target_unit: t.unit,
        target: t.values,
        range,
        dropped_rows: dropped,
        dataset: ds,
    })
}

struct SplitData {
    label: String,
    spec: SplitSpec,
    ranges: TemporalSplit,
    scaler: StandardizationParams,
    yscale: ScalarScaler,
    /// Standardized sensors over every row, missing stays NaN.
    channels: Matrix,
}

struct TappedData {
    label: String,
    seconds: f64,
    cfg: TappedDelayConfig,
    train: TappedDelayView,
    val: TappedDelayView,
    test: TappedDelayView,
    y_train: Vec<f64>,
    y_val: Vec<f64>,
}

struct SeqData {
    /// Inputs with missing values held, rows `0..test.end`.
    u: Matrix,
    held: Vec<bool>,
    y: Vec<f64>,
}

enum Features {
    Tapped(TappedData),
    Sequence(SeqData),
}

impl Features {
    fn tdl_label(&self) -> &str {
        match self {
            Features::Tapped(t) => &t.label,
            Features::Sequence(_) => "-",
        }
    }
}

/// Predictions on one evaluation segment, in target units.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub rows: Vec<usize>,
    pub targets: Vec<f64>,
    pub predictions: Vec<f64>,
    /// Rows of the segment without an estimate (incomplete window, held input).
    pub unestimated: usize,
}

pub struct FitOutput {
    pub model: TrainedModel,
    pub val: Segment,
    pub test: Segment,
}

fn prepare_split(p: &PreparedDataset, label: &str, spec: SplitSpec) -> Result<SplitData> {
    let ranges = spec.ranges(p.dataset.len())?;
    let train_ch = p.dataset.channels().slice_rows(ranges.train.start, ranges.train.end);
    let scaler = standardize(&train_ch)?;
    let yscale = ScalarScaler::fit(&p.target[ranges.train.clone()])?;
    let channels = scaler.apply(p.dataset.channels())?;
    Ok(SplitData { label: label.to_string(), spec, ranges, scaler, yscale, channels })
}

fn prepare_tapped(p: &PreparedDataset, s: &SplitData, label: &str) -> Result<TappedData> {
    let seconds = parse_duration(label)?;
    let cfg = TappedDelayConfig::from_duration(seconds, p.dataset.sampling_period)?;
    let view = |r: std::ops::Range<usize>| tapped_delay_rows(&s.channels, &p.target, cfg, r, TargetPolicy::Require);
    let train = view(s.ranges.train.clone())?;
    let val = view(s.ranges.val.clone())?;
    let test = view(s.ranges.test.clone())?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Empty(format!("split {} with window {label} leaves no usable train or validation rows", s.label)));
    }
    let y_train = train.targets.iter().map(|v| s.yscale.forward(*v)).collect();
    let y_val = val.targets.iter().map(|v| s.yscale.forward(*v)).collect();
    Ok(TappedData { label: label.to_string(), seconds, cfg, train, val, test, y_train, y_val })
}

fn prepare_sequence(p: &PreparedDataset, s: &SplitData) -> SeqData {
    let end = s.ranges.test.end;
    let (u, held) = hold_missing(&s.channels.slice_rows(0, end));
    let y = p.target[..end].iter().map(|v| s.yscale.forward(*v)).collect();
    SeqData { u, held, y }
}

fn segment_from_view(v: &TappedDelayView, range_len: usize, pred_std: Vec<f64>, ys: &ScalarScaler) -> Segment {
    Segment {
        rows: v.times.clone(),
        targets: v.targets.clone(),
        predictions: pred_std.into_iter().map(|p| ys.inverse(p)).collect(),
        unestimated: range_len - v.len(),
    }
}

/// Initial noise level for a GPR repetition: log-uniform over
/// `[1e-2 std(y), std(y)/sqrt(2)]`.
pub fn gpr_initial_noise(y_std: f64, seed: u64) -> f64 {
    let s = if y_std > 0.0 { y_std } else { 1.0 };
    let (lo, hi) = ((1e-2 * s).ln(), (s / 2f64.sqrt()).ln());
    let mut rng = substream(seed);
    rng.gen_range(lo..=hi).exp()
}

fn fit_tapped(cfg: &ExperimentConfig, s: &SplitData, d: &TappedData, tuple: &HyperTuple, seed: u64) -> Result<FitOutput> {
    let x = &d.train.features;
    let y = &d.y_train;
    let model = match *tuple {
        HyperTuple::Mlr => TrainedModel::Mlr(fit_mlr(x, y, RidgeSpec::NONE)?),
        HyperTuple::Mlp { hidden, epochs } => {
            let mut spec = MlpTrainSpec::new(hidden, epochs, seed);
            spec.learning_rate = cfg.mlp.learning_rate;
            TrainedModel::Mlp(mlp_train(x, y, &d.val.features, &d.y_val, &spec)?.model)
        }
        HyperTuple::Svr { gamma, c, epsilon } => {
            let eps = match cfg.svr.epsilon_units {
                EpsilonUnits::Standardized => epsilon,
                EpsilonUnits::Target => epsilon / s.yscale.std,
            };
            let mut p = SvrParams::new(c, gamma, eps);
            p.tolerance = cfg.svr.tolerance;
            p.cache_bytes = cfg.svr.cache_mb.saturating_mul(1 << 20);
            TrainedModel::Svr(svr_fit(x, y, &p)?)
        }
        HyperTuple::Gpr { kernel } => {
            let start = GprSpec::default_start(x, y);
            let noise = gpr_initial_noise(sample_std(y), seed);
            let spec = if cfg.gpr.optimize {
                GprSpec::optimized(kernel, start, noise)
            } else {
                GprSpec::fixed(kernel, start, noise)
            };
            TrainedModel::Gpr(gpr_fit(x, y, &spec)?)
        }
        HyperTuple::Esn { .. } => return Err(Error::InvalidParameter("reservoir trials use the sequence path".into())),
    };
    let val = segment_from_view(&d.val, s.ranges.val.len(), model.predict(&d.val.features)?, &s.yscale);
    let test = segment_from_view(&d.test, s.ranges.test.len(), model.predict(&d.test.features)?, &s.yscale);
    Ok(FitOutput { model, val, test })
}

fn fit_sequence(cfg: &ExperimentConfig, s: &SplitData, d: &SeqData, tuple: &HyperTuple, seed: u64) -> Result<FitOutput> {
    let HyperTuple::Esn { spectral_radius, input_scaling, units } = *tuple else {
        return Err(Error::InvalidParameter("sequence path only serves the reservoir model".into()));
    };
    let mut spec = EsnSpec::new(spectral_radius, input_scaling, units, seed);
    spec.washout = cfg.esn.washout;
    let m = esn_build(&spec, d.u.cols())?;
    let states = esn_run_states(&m, &d.u, None)?;
    let fit = ReadoutFit { skip: Some(&d.held), ..ReadoutFit::new(spec.washout_for(s.ranges.train.len())) };
    let m = esn_fit_readout(&m, &d.u, &states, &d.y, s.ranges.train.clone(), &fit)?;
    let pred = esn_readout(&m, &d.u, &states)?;
    let seg = |r: std::ops::Range<usize>| -> Segment {
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        let mut predictions = Vec::new();
        let mut unestimated = 0;
        for t in r {
            if d.held[t] {
                unestimated += 1;
                continue;
            }
            rows.push(t);
            targets.push(s.yscale.inverse(d.y[t]));
            predictions.push(s.yscale.inverse(pred[t]));
        }
        Segment { rows, targets, predictions, unestimated }
    };
    Ok(FitOutput { model: TrainedModel::Esn(m), val: seg(s.ranges.val.clone()), test: seg(s.ranges.test.clone()) })
}

fn fit_cell(cfg: &ExperimentConfig, s: &SplitData, f: &Features, tuple: &HyperTuple, seed: u64) -> Result<FitOutput> {
    match f {
        Features::Tapped(d) => fit_tapped(cfg, s, d, tuple, seed),
        Features::Sequence(d) => fit_sequence(cfg, s, d, tuple, seed),
    }
}

pub fn trial_seed(master: u64, method: MethodKind, split: &str, tdl: &str, tuple: &str, rep: usize) -> u64 {
    derive_seed(&[master.to_string(), method.to_string(), split.to_string(), tdl.to_string(), tuple.to_string(), rep.to_string()])
}

struct Job {
    cell: usize,
    tuple: HyperTuple,
    rep: usize,
    stage: Stage,
}

struct CellRun {
    method: MethodKind,
    name: String,
    dir: PathBuf,
}

fn run_trial(cfg: &ExperimentConfig, p: &PreparedDataset, s: &SplitData, f: &Features, cell: &CellRun, job: &Job) -> TrialRecord {
    let tuple_s = job.tuple.to_string();
    let tdl = f.tdl_label().to_string();
    let seed = trial_seed(cfg.seed, cell.method, &s.label, &tdl, &tuple_s, job.rep);
    let started = Instant::now();
    let (tdl_seconds, taps) = match f {
        Features::Tapped(d) => (d.seconds, d.cfg.taps()),
        Features::Sequence(_) => (f64::NAN, 0),
    };
    let mut rec = TrialRecord {
        method: cell.method,
        split: s.label.clone(),
        tsl: s.spec.train_len,
        tdl,
        tdl_seconds,
        taps,
        tuple: tuple_s,
        rep: job.rep,
        seed,
        stage: job.stage,
        status: TrialStatus::Failed,
        val_mae: f64::NAN,
        test_mae: f64::NAN,
        test_std_abs_err: f64::NAN,
        test_relative_mae: f64::NAN,
        n_val: 0,
        n_test: 0,
        n_test_skipped: 0,
        stored: 0,
        n_sv: 0,
        message: String::new(),
        duration_ms: 0,
    };
    let outcome = fit_cell(cfg, s, f, &job.tuple, seed).and_then(|out| {
        let v = compute_mae(&out.val.predictions, &out.val.targets, None, p.range)?;
        let t = compute_mae(&out.test.predictions, &out.test.targets, None, p.range)?;
        Ok((out, v, t))
    });
    match outcome {
        Ok((out, v, t)) => {
            rec.status = TrialStatus::Ok;
            rec.val_mae = v.mae;
            rec.test_mae = t.mae;
            rec.test_std_abs_err = t.std_abs_err;
            rec.test_relative_mae = t.relative_mae;
            rec.n_val = v.n_evaluated;
            rec.n_test = t.n_evaluated;
            rec.n_test_skipped = t.n_skipped + out.test.unestimated;
            rec.stored = footprint(&out.model).stored;
            if let TrainedModel::Svr(m) = &out.model {
                rec.n_sv = m.n_support();
            }
        }
        Err(e) => rec.message = e.to_string(),
    }
    rec.duration_ms = started.elapsed().as_millis() as u64;
    rec
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Progress lines on stderr.
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: BenchmarkReport,
    pub trials_run: usize,
    pub trials_reused: usize,
    /// Cells without a single successful trial.
    pub empty_cells: Vec<String>,
}

impl RunSummary {
    pub fn complete(&self) -> bool {
        self.empty_cells.is_empty()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let ds = cfg.dataset.load()?;
    run_experiment_on(cfg, ds, opts)
}

/// Runs the configured protocol on an already loaded dataset. Trials whose
/// records already exist under `cfg.out` are not repeated.
pub fn run_experiment_on(cfg: &ExperimentConfig, ds: TimeSeriesDataset, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let p = prepare_dataset(cfg, ds)?;
    fs::create_dir_all(cfg.out.join(CELLS_DIR)).map_err(|e| Error::io(&cfg.out, e))?;
    write_file(&cfg.out.join(CONFIG_FILE), &cfg.to_toml()?)?;
    write_file(&cfg.out.join(RUN_META), &run_meta(cfg, &p))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut trials_run = 0;
    let mut trials_reused = 0;
    let mut empty_cells = Vec::new();
    for split_label in &cfg.splits {
        let spec = SplitEntry::parse(split_label)?.resolve(p.dataset.len())?;
        let label = spec.to_string();
        let s = prepare_split(&p, &label, spec)?;
        let mut groups: Vec<(Option<String>, Vec<MethodKind>)> = Vec::new();
        let tapped: Vec<MethodKind> = cfg.methods.iter().copied().filter(|m| *m != MethodKind::Esn).collect();
        if !tapped.is_empty() {
            for t in &cfg.tdl {
                groups.push((Some(t.clone()), tapped.clone()));
            }
        }
        if cfg.methods.contains(&MethodKind::Esn) {
            groups.push((None, vec![MethodKind::Esn]));
        }
        for (tdl, methods) in groups {
            let features = match &tdl {
                Some(t) => prepare_tapped(&p, &s, t).map(Features::Tapped),
                None => Ok(Features::Sequence(prepare_sequence(&p, &s))),
            };
            let tdl_label = tdl.clone().unwrap_or_else(|| "-".into());
            let features = match features {
                Ok(f) => f,
                Err(e) => {
                    for m in &methods {
                        let name = cell_dir_name(*m, &label, &tdl_label);
                        if opts.verbose {
                            eprintln!("{name}: skipped ({e})");
                        }
                        empty_cells.push(name);
                    }
                    continue;
                }
            };
            let stats = run_group(cfg, &p, &s, &features, &methods, &pool, opts)?;
            trials_run += stats.0;
            trials_reused += stats.1;
            empty_cells.extend(stats.2);
        }
    }
    let records = load_all_records(&cfg.out)?;
    let report = build_report(&records);
    emit_report(&report, &cfg.out)?;
    Ok(RunSummary { report, trials_run, trials_reused, empty_cells })
}

fn run_group(
    cfg: &ExperimentConfig,
    p: &PreparedDataset,
    s: &SplitData,
    f: &Features,
    methods: &[MethodKind],
    pool: &rayon::ThreadPool,
    opts: &RunOptions,
) -> Result<(usize, usize, Vec<String>)> {
    let tdl = f.tdl_label().to_string();
    let cells: Vec<CellRun> = methods
        .iter()
        .map(|&m| {
            let name = cell_dir_name(m, &s.label, &tdl);
            CellRun { method: m, dir: cfg.out.join(CELLS_DIR).join(&name), name }
        })
        .collect();
    let mut existing: Vec<Vec<TrialRecord>> = Vec::new();
    let mut writers = Vec::new();
    for c in &cells {
        fs::create_dir_all(&c.dir).map_err(|e| Error::io(&c.dir, e))?;
        let path = c.dir.join(TRIALS_FILE);
        existing.push(read_records(&path)?);
        writers.push(Mutex::new(RecordWriter::open(&path)?));
    }
    let done = |cell: usize, recs: &[TrialRecord], tuple: &HyperTuple, rep: usize| -> bool {
        let t = tuple.to_string();
        let seed = trial_seed(cfg.seed, cells[cell].method, &s.label, &tdl, &t, rep);
        recs.iter().any(|r| r.tuple == t && r.rep == rep && r.seed == seed)
    };
    let mut jobs = Vec::new();
    let mut reused = 0;
    for (ci, c) in cells.iter().enumerate() {
        let (tuples, stage) = if c.method == MethodKind::Svr && cfg.svr.search == SvrSearch::TwoStage {
            (svr_coarse_grid(&cfg.svr), Stage::Coarse)
        } else {
            (expand_grid(cfg, c.method)?, Stage::Full)
        };
        if opts.verbose {
            eprintln!("{}: {} tuples x {} repetitions", c.name, tuples.len(), cfg.repetitions.of(c.method));
        }
        for tuple in tuples {
            for rep in 0..cfg.repetitions.of(c.method) {
                if done(ci, &existing[ci], &tuple, rep) {
                    reused += 1;
                } else {
                    jobs.push(Job { cell: ci, tuple, rep, stage });
                }
            }
        }
    }
    let execute = |jobs: &[Job]| -> Result<Vec<TrialRecord>> {
        let results: Vec<Result<TrialRecord>> = pool.install(|| {
            jobs.par_iter()
                .map(|j| {
                    let rec = run_trial(cfg, p, s, f, &cells[j.cell], j);
                    writers[j.cell].lock().expect("record writer lock").append(&rec)?;
                    Ok(rec)
                })
                .collect()
        });
        results.into_iter().collect()
    };
    let mut ran = jobs.len();
    let fresh = execute(&jobs)?;
    for r in fresh {
        let ci = cells.iter().position(|c| c.method == r.method).expect("record of a known cell");
        existing[ci].push(r);
    }

    // second stage of the SVR search
    for (ci, c) in cells.iter().enumerate() {
        if !(c.method == MethodKind::Svr && cfg.svr.search == SvrSearch::TwoStage) {
            continue;
        }
        let coarse: Vec<TrialRecord> = existing[ci].iter().filter(|r| r.stage == Stage::Coarse).cloned().collect();
        let sums = summarize(&coarse);
        let Some(best) = select_best(&sums).and_then(|b| b.hyper) else { continue };
        let mut refine = Vec::new();
        for tuple in svr_refine_grid(&cfg.svr, &best) {
            for rep in 0..cfg.repetitions.of(c.method) {
                if done(ci, &existing[ci], &tuple, rep) {
                    reused += 1;
                } else {
                    refine.push(Job { cell: ci, tuple, rep, stage: Stage::Refine });
                }
            }
        }
        ran += refine.len();
        existing[ci].extend(execute(&refine)?);
    }

    let mut empty = Vec::new();
    for (ci, c) in cells.iter().enumerate() {
        let sums = summarize(&existing[ci]);
        match select_best(&sums) {
            Some(best) => write_winner(cfg, p, s, f, c, best.hyper.as_ref(), best.valbest_rep)?,
            None => {
                if opts.verbose {
                    eprintln!("{}: no successful trial", c.name);
                }
                empty.push(c.name.clone());
            }
        }
    }
    Ok((ran, reused, empty))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_meta(cfg: &ExperimentConfig, p: &PreparedDataset) -> String {
    let mut c = Container::default();
    c.key("kind", "run")
        .key("name", &cfg.name)
        .key("dataset", &p.dataset.name)
        .key("target", &p.target_name)
        .key("unit", &p.target_unit)
        .key("sampling_period", fmt_f64(p.dataset.sampling_period))
        .key("rows", p.dataset.len())
        .key("dropped_rows", p.dropped_rows)
        .key("target_range", fmt_f64(p.range));
    c.to_text()
}

fn preprocessing_text(p: &PreparedDataset, s: &SplitData, f: &Features) -> String {
    let names: Vec<&str> = s.scaler.kept.iter().map(|&j| p.dataset.channel_names()[j].as_str()).collect();
    let mut c = Container::default();
    c.key("kind", "preprocessing")
        .key("target", &p.target_name)
        .key("split", &s.label)
        .key("window", f.tdl_label())
        .key("taps", match f {
            Features::Tapped(d) => d.cfg.taps(),
            Features::Sequence(_) => 0,
        })
        .key("channels", names.join(","));
    c.vector("channel_mean", &s.scaler.mean)
        .vector("channel_std", &s.scaler.std)
        .vector("target_scale", &[s.yscale.mean, s.yscale.std]);
    c.to_text()
}

fn write_winner(
    cfg: &ExperimentConfig,
    p: &PreparedDataset,
    s: &SplitData,
    f: &Features,
    c: &CellRun,
    tuple: Option<&HyperTuple>,
    rep: usize,
) -> Result<()> {
    let Some(tuple) = tuple else { return Ok(()) };
    let seed = trial_seed(cfg.seed, c.method, &s.label, f.tdl_label(), &tuple.to_string(), rep);
    let out = match fit_cell(cfg, s, f, tuple, seed) {
        Ok(o) => o,
        Err(_) => return Ok(()),
    };
    let dir = c.dir.join(WINNER_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_file(&dir.join("model.txt"), &out.model.to_text())?;
    write_file(&dir.join("preprocessing.txt"), &preprocessing_text(p, s, f))?;
    let mut csv = String::from("row,segment,target,prediction\n");
    for (name, seg) in [("val", &out.val), ("test", &out.test)] {
        for i in 0..seg.rows.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                seg.rows[i],
                name,
                fmt_f64(seg.targets[i]),
                fmt_f64(seg.predictions[i])
            ));
        }
    }
    write_file(&dir.join("predictions.csv"), &csv)?;
    write_file(&dir.join("selection.txt"), &format!("tuple = {tuple}\nrep = {rep}\nseed = {seed}\n"))
}

/// Every trial record under an output directory, in a fixed order.
pub fn load_all_records(out: &Path) -> Result<Vec<TrialRecord>> {
    let cells = out.join(CELLS_DIR);
    if !cells.exists() {
        return Ok(Vec::new());
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(&cells)
        .map_err(|e| Error::io(&cells, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut all = Vec::new();
    for d in dirs {
        all.extend(read_records(&d.join(TRIALS_FILE))?);
    }
    let mut uniq: BTreeMap<_, TrialRecord> = BTreeMap::new();
    for r in all {
        uniq.entry(r.key()).or_insert(r);
    }
    Ok(uniq.into_values().collect())
}

/// Winner predictions of every cell: cell name to rows of
/// `(row, segment, target, prediction)`.
pub fn load_winner_predictions(out: &Path) -> Result<BTreeMap<String, Vec<(usize, String, f64, f64)>>> {
    let mut res = BTreeMap::new();
    let cells = out.join(CELLS_DIR);
    if !cells.exists() {
        return Ok(res);
    }
    let mut names: Vec<String> = fs::read_dir(&cells)
        .map_err(|e| Error::io(&cells, e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for n in names {
        let path = cells.join(&n).join(WINNER_DIR).join("predictions.csv");
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::parse(i + 1, format!("{}: malformed prediction row", path.display()));
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| crate::textfmt::parse_f64(s).ok_or_else(bad);
            rows.push((f[0].parse().map_err(|_| bad())?, f[1].to_string(), num(f[2])?, num(f[3])?));
        }
        res.insert(n, rows);
    }
    Ok(res)
}

/// Key/value contents of `run.meta`.
pub fn read_run_meta(out: &Path) -> Result<HashMap<String, String>> {
    let path = out.join(RUN_META);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let c = Container::parse(&text)?;
    Ok(c.keys.into_iter().collect())
}
