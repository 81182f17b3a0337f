//! Report tables, plot-ready long-format data and post-hoc dynamics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::grid::HyperTuple;
use super::records::{cell_dir_name, TrialRecord};
use super::select::{select_best, summarize, TupleSummary};
use crate::error::{Error, Result};
use crate::eval::{derivative_binned_mae, transient_response, BinSpec, STD_CONVENTION};
use crate::model::MethodKind;
use crate::textfmt::fmt_f64;

/// Relative MAE above which a cell is printed as out of scale.
pub const OUT_OF_SCALE_RELATIVE: f64 = 10.0;

/// Winning tuple of one `(method, split, window)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub summary: TupleSummary,
    /// Lowest mean test MAE among the tapped-delay methods sharing the
    /// same split and window.
    pub cell_best: bool,
    pub out_of_scale: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkReport {
    /// Cell winners ordered by split, window, method.
    pub cells: Vec<CellResult>,
    /// Per `(method, split)`, the winner across windows.
    pub best_per_split: Vec<TupleSummary>,
    /// Every aggregated tuple, for scatter plots.
    pub tuples: Vec<TupleSummary>,
}

fn cell_order(s: &TupleSummary) -> (usize, String, u64, String, MethodKind) {
    let secs = if s.tdl_seconds.is_finite() { s.tdl_seconds.to_bits() } else { u64::MAX };
    (s.tsl, s.split.clone(), secs, s.tdl.clone(), s.method)
}

pub fn build_report(records: &[TrialRecord]) -> BenchmarkReport {
    let tuples = summarize(records);
    let mut by_cell: BTreeMap<(MethodKind, String, String), Vec<&TupleSummary>> = BTreeMap::new();
    for t in &tuples {
        by_cell.entry((t.method, t.split.clone(), t.tdl.clone())).or_default().push(t);
    }
    let mut cells: Vec<CellResult> = by_cell
        .values()
        .filter_map(|v| select_best(v.iter().copied()))
        .map(|s| CellResult {
            out_of_scale: s.relative_mae > OUT_OF_SCALE_RELATIVE,
            summary: s.clone(),
            cell_best: false,
        })
        .collect();
    cells.sort_by(|a, b| cell_order(&a.summary).cmp(&cell_order(&b.summary)));

    let mut best: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        if c.summary.method == MethodKind::Esn {
            continue;
        }
        let k = (c.summary.split.clone(), c.summary.tdl.clone());
        match best.get(&k) {
            Some(&j) if cells[j].summary.test_mae_mean <= c.summary.test_mae_mean => {}
            _ => {
                best.insert(k, i);
            }
        }
    }
    for i in best.into_values() {
        cells[i].cell_best = true;
    }

    let mut per_split: BTreeMap<(MethodKind, String), Vec<&TupleSummary>> = BTreeMap::new();
    for c in &cells {
        per_split.entry((c.summary.method, c.summary.split.clone())).or_default().push(&c.summary);
    }
    let mut best_per_split: Vec<TupleSummary> =
        per_split.values().filter_map(|v| select_best(v.iter().copied())).cloned().collect();
    best_per_split.sort_by(|a, b| (a.method, a.tsl, &a.split).cmp(&(b.method, b.tsl, &b.split)));
    BenchmarkReport { cells, best_per_split, tuples }
}

pub const TABLE2_HEADER: &str = "method,label,split,tsl,tdl,tdl_seconds,tuple,reps_ok,reps_failed,val_mae_mean,\
test_mae_mean,test_mae_std,test_mae_min,test_mae_valbest,test_std_abs_err,relative_mae,stored_mean,n_sv,cell_best,out_of_scale";

pub const TABLE3_HEADER: &str = "method,label,split,tsl,tdl,tuple,val_mae_mean,test_mae_mean,test_mae_std,stored_mean";

fn table2_row(c: &CellResult) -> String {
    let s = &c.summary;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.method,
        s.method.label(),
        s.split,
        s.tsl,
        s.tdl,
        fmt_f64(s.tdl_seconds),
        s.tuple,
        s.reps_ok,
        s.reps_failed,
        fmt_f64(s.val_mae_mean),
        fmt_f64(s.test_mae_mean),
        fmt_f64(s.test_mae_std),
        fmt_f64(s.test_mae_min),
        fmt_f64(s.test_mae_valbest),
        fmt_f64(s.test_std_abs_err),
        fmt_f64(s.relative_mae),
        fmt_f64(s.stored_mean),
        s.n_sv,
        c.cell_best as u8,
        c.out_of_scale as u8
    )
}

fn mae_cell_text(c: &CellResult) -> String {
    let s = &c.summary;
    if c.out_of_scale {
        return "-".into();
    }
    let mut t = if s.reps_ok > 1 {
        format!("{:.2} ({:.2})/{:.2}", s.test_mae_mean, s.test_mae_std, s.test_mae_min)
    } else {
        format!("{:.2}", s.test_mae_mean)
    };
    if c.cell_best {
        t.push('*');
    }
    t
}

fn table2_text(r: &BenchmarkReport) -> String {
    let mut out = String::from("Best test MAE per (split, window); mean (std)/min over repetitions.\n");
    let _ = writeln!(out, "* lowest mean among tapped-delay methods in the column; - out of scale.");
    let _ = writeln!(out, "std: {STD_CONVENTION}\n");
    let mut splits: Vec<(usize, String)> = r.cells.iter().map(|c| (c.summary.tsl, c.summary.split.clone())).collect();
    splits.dedup();
    for (_, split) in splits {
        let cells: Vec<&CellResult> = r.cells.iter().filter(|c| c.summary.split == split).collect();
        let mut tdls: Vec<(u64, String)> = Vec::new();
        for c in &cells {
            let k = (cell_order(&c.summary).2, c.summary.tdl.clone());
            if !tdls.contains(&k) {
                tdls.push(k);
            }
        }
        tdls.sort();
        let methods: Vec<MethodKind> = MethodKind::ALL.iter().copied().filter(|m| cells.iter().any(|c| c.summary.method == *m)).collect();
        let _ = writeln!(out, "split {split}");
        let _ = write!(out, "{:<6}", "");
        for (_, t) in &tdls {
            let _ = write!(out, "{:>24}", if t == "-" { "sequence" } else { t });
        }
        out.push('\n');
        for m in methods {
            let _ = write!(out, "{:<6}", m.label());
            for (_, t) in &tdls {
                let txt = cells
                    .iter()
                    .find(|c| c.summary.method == m && &c.summary.tdl == t)
                    .map(|c| mae_cell_text(c))
                    .unwrap_or_default();
                let _ = write!(out, "{txt:>24}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn table3_text(r: &BenchmarkReport) -> String {
    let mut out = String::from("Selected window and hyperparameters per method and split (by validation MAE).\n\n");
    for s in &r.best_per_split {
        let _ = writeln!(
            out,
            "{:<4} {:<22} window {:<8} {:<48} val {:.4} test {:.4}",
            s.method.label(),
            s.split,
            s.tdl,
            s.tuple,
            s.val_mae_mean,
            s.test_mae_mean
        );
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes every report file into `dir`. Empty reports give header-only
/// tables.
pub fn emit_report(r: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut t2 = format!("{TABLE2_HEADER}\n");
    for c in &r.cells {
        t2.push_str(&table2_row(c));
        t2.push('\n');
    }
    write(&dir.join("table2.csv"), &t2)?;
    write(&dir.join("table2.txt"), &table2_text(r))?;

    let mut t3 = format!("{TABLE3_HEADER}\n");
    for s in &r.best_per_split {
        let _ = writeln!(
            t3,
            "{},{},{},{},{},{},{},{},{},{}",
            s.method,
            s.method.label(),
            s.split,
            s.tsl,
            s.tdl,
            s.tuple,
            fmt_f64(s.val_mae_mean),
            fmt_f64(s.test_mae_mean),
            fmt_f64(s.test_mae_std),
            fmt_f64(s.stored_mean)
        );
    }
    write(&dir.join("table3.csv"), &t3)?;
    write(&dir.join("table3.txt"), &table3_text(r))?;

    let mut by_tdl = String::from("method,split,tsl,tdl,tdl_seconds,test_mae_mean,test_mae_std,test_mae_min,val_mae_mean\n");
    for c in &r.cells {
        let s = &c.summary;
        let _ = writeln!(
            by_tdl,
            "{},{},{},{},{},{},{},{},{}",
            s.method,
            s.split,
            s.tsl,
            s.tdl,
            fmt_f64(s.tdl_seconds),
            fmt_f64(s.test_mae_mean),
            fmt_f64(s.test_mae_std),
            fmt_f64(s.test_mae_min),
            fmt_f64(s.val_mae_mean)
        );
    }
    write(&dir.join("mae_vs_tdl.csv"), &by_tdl)?;

    let mut rows: Vec<&TupleSummary> = r.cells.iter().map(|c| &c.summary).collect();
    rows.sort_by(|a, b| (a.method, &a.tdl, a.tsl, &a.split).cmp(&(b.method, &b.tdl, b.tsl, &b.split)));
    let mut by_tsl = String::from("method,tdl,tsl,split,test_mae_mean,test_mae_std,test_mae_min,val_mae_mean\n");
    for s in rows {
        let _ = writeln!(
            by_tsl,
            "{},{},{},{},{},{},{},{}",
            s.method,
            s.tdl,
            s.tsl,
            s.split,
            fmt_f64(s.test_mae_mean),
            fmt_f64(s.test_mae_std),
            fmt_f64(s.test_mae_min),
            fmt_f64(s.val_mae_mean)
        );
    }
    write(&dir.join("mae_vs_tsl.csv"), &by_tsl)?;

    let mut sv = String::from("split,tdl,gamma,c,epsilon,n_sv,val_mae,test_mae\n");
    for s in r.tuples.iter().filter(|s| s.method == MethodKind::Svr) {
        if let Some(HyperTuple::Svr { gamma, c, epsilon }) = s.hyper {
            let _ = writeln!(
                sv,
                "{},{},{},{},{},{},{},{}",
                s.split,
                s.tdl,
                fmt_f64(gamma),
                fmt_f64(c),
                fmt_f64(epsilon),
                s.n_sv,
                fmt_f64(s.val_mae_mean),
                fmt_f64(s.test_mae_mean)
            );
        }
    }
    write(&dir.join("sv_scatter.csv"), &sv)
}

/// One winner's test predictions laid out densely over its row span;
/// rows without an estimate are NaN.
struct Dense {
    first: usize,
    targets: Vec<f64>,
    predictions: Vec<f64>,
}

fn dense_test(rows: &[(usize, String, f64, f64)]) -> Option<Dense> {
    let test: Vec<&(usize, String, f64, f64)> = rows.iter().filter(|r| r.1 == "test").collect();
    let first = test.iter().map(|r| r.0).min()?;
    let last = test.iter().map(|r| r.0).max()?;
    let mut targets = vec![f64::NAN; last - first + 1];
    let mut predictions = targets.clone();
    for r in test {
        targets[r.0 - first] = r.2;
        predictions[r.0 - first] = r.3;
    }
    Some(Dense { first, targets, predictions })
}

fn comparison_series(d: &Dense, other: &Dense) -> Vec<f64> {
    (0..d.targets.len())
        .map(|i| {
            let row = d.first + i;
            row.checked_sub(other.first).and_then(|j| other.predictions.get(j)).copied().unwrap_or(f64::NAN)
        })
        .collect()
}

/// Derivative-binned MAE and transient analysis of every winner's test
/// predictions. The comparison trace of a tapped-delay cell is the same
/// method's winner at the shortest window of the split.
pub fn run_dynamics(out: &Path, threshold: Option<f64>, bins: &BinSpec) -> Result<(String, String)> {
    let meta = super::runner::read_run_meta(out)?;
    let num = |k: &str| -> Result<f64> {
        meta.get(k)
            .and_then(|v| crate::textfmt::parse_f64(v))
            .ok_or_else(|| Error::Config(format!("run metadata lacks {k}")))
    };
    let period = num("sampling_period")?;
    let threshold = match threshold {
        Some(t) => t,
        None => 0.1 * num("target_range")?,
    };
    let report = build_report(&super::runner::load_all_records(out)?);
    let preds = super::runner::load_winner_predictions(out)?;

    let mut shortest: BTreeMap<(MethodKind, String), (u64, String)> = BTreeMap::new();
    for c in &report.cells {
        let s = &c.summary;
        if s.method == MethodKind::Esn {
            continue;
        }
        let k = (s.method, s.split.clone());
        let v = (cell_order(s).2, s.tdl.clone());
        if shortest.get(&k).map_or(true, |cur| v < *cur) {
            shortest.insert(k, v);
        }
    }

    let mut bins_csv = String::from("method,split,tdl,bin,lower,upper,count,mae\n");
    let mut trans_csv = String::from(
        "method,split,tdl,comparison_tdl,event,row,time,from,to,magnitude,t90,t90_comparison,overshoot,overshoot_comparison\n",
    );
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for c in &report.cells {
        let s = &c.summary;
        let name = cell_dir_name(s.method, &s.split, &s.tdl);
        let Some(d) = preds.get(&name).and_then(|r| dense_test(r)) else { continue };
        if let Ok(b) = derivative_binned_mae(&d.predictions, &d.targets, period, bins) {
            for k in 0..b.mae.len() {
                let _ = writeln!(
                    bins_csv,
                    "{},{},{},{},{},{},{},{}",
                    s.method,
                    s.split,
                    s.tdl,
                    k,
                    fmt_f64(b.edges[k]),
                    fmt_f64(b.edges[k + 1]),
                    b.counts[k],
                    fmt_f64(b.mae[k])
                );
            }
        }
        let cmp_tdl = shortest
            .get(&(s.method, s.split.clone()))
            .map(|v| v.1.clone())
            .filter(|t| *t != s.tdl);
        let cmp = cmp_tdl
            .as_ref()
            .and_then(|t| preds.get(&cell_dir_name(s.method, &s.split, t)))
            .and_then(|r| dense_test(r))
            .map(|o| comparison_series(&d, &o));
        let tr = transient_response(&d.predictions, &d.targets, threshold, period, cmp.as_deref())?;
        for (i, e) in tr.events.iter().enumerate() {
            let _ = writeln!(
                trans_csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.method,
                s.split,
                s.tdl,
                if cmp.is_some() { cmp_tdl.as_deref().unwrap_or("") } else { "" },
                i,
                d.first + e.index,
                fmt_f64((d.first + e.index) as f64 * period),
                fmt_f64(e.from),
                fmt_f64(e.to),
                fmt_f64(e.magnitude),
                opt(e.t90),
                opt(e.t90_comparison),
                fmt_f64(e.overshoot),
                opt(e.overshoot_comparison)
            );
        }
    }
    write(&out.join("derivative_bins.csv"), &bins_csv)?;
    write(&out.join("transient.csv"), &trans_csv)?;
    Ok((bins_csv, trans_csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::records::{Stage, TrialStatus};

    fn rec(method: MethodKind, tdl: &str, tuple: &str, val: f64, test: f64) -> TrialRecord {
        TrialRecord {
            method,
            split: "10-5-5".into(),
            tsl: 10,
            tdl: tdl.into(),
            tdl_seconds: if tdl == "-" { f64::NAN } else { 1.0 },
            taps: 1,
            tuple: tuple.into(),
            rep: 0,
            seed: 1,
            stage: Stage::Full,
            status: TrialStatus::Ok,
            val_mae: val,
            test_mae: test,
            test_std_abs_err: 0.1,
            test_relative_mae: test / 10.0,
            n_val: 5,
            n_test: 5,
            n_test_skipped: 0,
            stored: 3,
            n_sv: 0,
            message: String::new(),
            duration_ms: 7,
        }
    }

    #[test]
    fn empty_report_has_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&build_report(&[]), dir.path()).unwrap();
        let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
        assert_eq!(t2.trim_end(), TABLE2_HEADER);
    }

    #[test]
    fn cell_best_ignores_sequence_model() {
        let recs = vec![
            rec(MethodKind::Mlr, "1s", "-", 1.0, 2.0),
            rec(MethodKind::Mlp, "1s", "hidden=3;epochs=10", 0.5, 1.5),
            rec(MethodKind::Esn, "-", "rho=0.5;is=0.1;units=10", 0.1, 0.1),
        ];
        let r = build_report(&recs);
        assert_eq!(r.cells.len(), 3);
        let best: Vec<MethodKind> = r.cells.iter().filter(|c| c.cell_best).map(|c| c.summary.method).collect();
        assert_eq!(best, vec![MethodKind::Mlp]);
    }

    #[test]
    fn out_of_scale_marker() {
        let r = build_report(&[rec(MethodKind::Mlr, "1s", "-", 1.0, 500.0)]);
        assert!(r.cells[0].out_of_scale);
        assert!(table2_text(&r).contains(" -"));
    }

    #[test]
    fn single_cell_row_matches_summary() {
        let r = build_report(&[rec(MethodKind::Mlr, "1s", "-", 1.0, 2.0)]);
        let row = table2_row(&r.cells[0]);
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "mlr");
        assert_eq!(f[10], fmt_f64(2.0));
    }
}
