//! Per-tuple aggregation of trial records and validation-based selection.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::grid::HyperTuple;
use super::records::TrialRecord;
use crate::linalg::{mean, sample_std};
use crate::model::MethodKind;

/// Aggregate over the repetitions of one hyperparameter tuple in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleSummary {
    pub method: MethodKind,
    pub split: String,
    pub tsl: usize,
    pub tdl: String,
    pub tdl_seconds: f64,
    pub tuple: String,
    pub hyper: Option<HyperTuple>,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub val_mae_mean: f64,
    pub test_mae_mean: f64,
    /// Sample std of the test MAE across repetitions (0 for one repetition).
    pub test_mae_std: f64,
    pub test_mae_min: f64,
    /// Repetition with the lowest validation MAE and its test figures.
    pub valbest_rep: usize,
    pub test_mae_valbest: f64,
    pub test_std_abs_err: f64,
    pub relative_mae: f64,
    pub stored_mean: f64,
    pub n_sv: usize,
}

/// Groups records by `(method, split, tdl, tuple)`; tuples whose every
/// repetition failed are omitted.
pub fn summarize(records: &[TrialRecord]) -> Vec<TupleSummary> {
    let mut groups: BTreeMap<(MethodKind, String, String, String), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.split.clone(), r.tdl.clone(), r.tuple.clone())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((method, split, tdl, tuple), mut recs) in groups {
        recs.sort_by_key(|r| r.rep);
        recs.dedup_by_key(|r| r.rep);
        let ok: Vec<&TrialRecord> = recs.iter().copied().filter(|r| r.is_ok()).collect();
        if ok.is_empty() {
            continue;
        }
        let val: Vec<f64> = ok.iter().map(|r| r.val_mae).collect();
        let test: Vec<f64> = ok.iter().map(|r| r.test_mae).collect();
        let best = ok
            .iter()
            .min_by(|a, b| a.val_mae.total_cmp(&b.val_mae).then(a.rep.cmp(&b.rep)))
            .expect("non-empty");
        out.push(TupleSummary {
            method,
            split,
            tsl: ok[0].tsl,
            tdl,
            tdl_seconds: ok[0].tdl_seconds,
            hyper: HyperTuple::parse(method, &tuple).ok(),
            tuple,
            reps_ok: ok.len(),
            reps_failed: recs.len() - ok.len(),
            val_mae_mean: mean(&val),
            test_mae_mean: mean(&test),
            test_mae_std: sample_std(&test),
            test_mae_min: test.iter().copied().fold(f64::INFINITY, f64::min),
            valbest_rep: best.rep,
            test_mae_valbest: best.test_mae,
            test_std_abs_err: best.test_std_abs_err,
            relative_mae: best.test_relative_mae,
            stored_mean: mean(&ok.iter().map(|r| r.stored as f64).collect::<Vec<_>>()),
            n_sv: best.n_sv,
        });
    }
    out
}

/// Selection order: mean validation MAE, then smaller footprint, then
/// lexicographic hyperparameter order.
pub fn selection_cmp(a: &TupleSummary, b: &TupleSummary) -> Ordering {
    a.val_mae_mean
        .total_cmp(&b.val_mae_mean)
        .then(a.stored_mean.total_cmp(&b.stored_mean))
        .then_with(|| match (&a.hyper, &b.hyper) {
            (Some(x), Some(y)) => x.lex_cmp(y),
            _ => a.tuple.cmp(&b.tuple),
        })
}

pub fn select_best<'a>(candidates: impl IntoIterator<Item = &'a TupleSummary>) -> Option<&'a TupleSummary> {
    candidates.into_iter().min_by(|a, b| selection_cmp(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::records::{Stage, TrialStatus};

    fn rec(tuple: &str, rep: usize, val: f64, test: f64, stored: usize) -> TrialRecord {
        TrialRecord {
            method: MethodKind::Svr,
            split: "10-5-5".into(),
            tsl: 10,
            tdl: "1s".into(),
            tdl_seconds: 1.0,
            taps: 1,
            tuple: tuple.into(),
            rep,
            seed: 0,
            stage: Stage::Full,
            status: TrialStatus::Ok,
            val_mae: val,
            test_mae: test,
            test_std_abs_err: 0.0,
            test_relative_mae: 0.0,
            n_val: 5,
            n_test: 5,
            n_test_skipped: 0,
            stored: stored,
            n_sv: stored,
            message: String::new(),
            duration_ms: 0,
        }
    }

    #[test]
    fn single_trial_is_selected() {
        let s = summarize(&[rec("gamma=1.0;c=1.0;epsilon=0.1", 0, 0.3, 0.4, 5)]);
        assert_eq!(select_best(&s).unwrap().tuple, "gamma=1.0;c=1.0;epsilon=0.1");
    }

    #[test]
    fn footprint_breaks_ties() {
        let s = summarize(&[
            rec("gamma=1.0;c=1.0;epsilon=0.1", 0, 0.3, 0.4, 50),
            rec("gamma=1.0;c=2.0;epsilon=0.1", 0, 0.3, 0.2, 20),
        ]);
        assert_eq!(select_best(&s).unwrap().tuple, "gamma=1.0;c=2.0;epsilon=0.1");
    }

    #[test]
    fn repetitions_aggregate() {
        let mut r = vec![rec("gamma=1.0;c=1.0;epsilon=0.1", 0, 0.3, 1.0, 5)];
        r.push(rec("gamma=1.0;c=1.0;epsilon=0.1", 1, 0.1, 3.0, 5));
        let mut f = rec("gamma=1.0;c=1.0;epsilon=0.1", 2, 0.0, 0.0, 5);
        f.status = TrialStatus::Failed;
        r.push(f);
        let s = &summarize(&r)[0];
        assert_eq!((s.reps_ok, s.reps_failed), (2, 1));
        assert_eq!(s.test_mae_mean, 2.0);
        assert_eq!(s.test_mae_min, 1.0);
        assert_eq!((s.valbest_rep, s.test_mae_valbest), (1, 3.0));
        assert!((s.test_mae_std - 2f64.sqrt()).abs() < 1e-15);
    }
}
