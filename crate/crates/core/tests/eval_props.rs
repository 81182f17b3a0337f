mod common;

use calibench::eval::{compute_mae, derivative_binned_mae, sv_tradeoff_scan, transient_response, BinSpec, SvScanRow};
use calibench::kernel::{svr_fit, SvrParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mae_matches_scalar_loop(
        pairs in prop::collection::vec((prop_oneof![9 => -100.0f64..100.0, 1 => Just(f64::NAN)], -100.0f64..100.0), 1..60)
    ) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(p.iter().any(|v| !v.is_nan()));
        let rep = compute_mae(&p, &t, None, 10.0).unwrap();
        let mut s = 0.0;
        let mut n = 0;
        for i in 0..p.len() {
            if !p[i].is_nan() {
                s += (p[i] - t[i]).abs();
                n += 1;
            }
        }
        prop_assert!((rep.mae - s / n as f64).abs() <= 1e-12 * (1.0 + rep.mae));
        prop_assert_eq!(rep.n_evaluated, n);
    }

    #[test]
    fn binned_errors_recombine(seed in 0u64..10_000, bins in 1usize..12) {
        let mut r = common::rng(seed);
        let y: Vec<f64> = common::random_vec(&mut r, 120, 5.0);
        let p: Vec<f64> = y.iter().zip(common::random_vec(&mut r, 120, 1.0)).map(|(a, b)| a + b).collect();
        let rep = derivative_binned_mae(&p, &y, 60.0, &BinSpec::Quantile(bins)).unwrap();
        let weighted: f64 = rep.mae.iter().zip(&rep.counts).filter(|(_, c)| **c > 0).map(|(m, c)| m * *c as f64).sum::<f64>()
            / rep.counts.iter().sum::<usize>() as f64;
        let direct = compute_mae(&p[..119], &y[..119], None, 1.0).unwrap().mae;
        prop_assert!((weighted - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!((rep.pooled_mae() - direct).abs() <= 1e-12 * (1.0 + direct));
    }
}

#[test]
fn first_order_lag_reaches_ninety_percent_at_ln10_tau() {
    let period = 1.0;
    for tau in [3.0, 7.5, 20.0] {
        let n = 400;
        let y: Vec<f64> = (0..n).map(|t| if t < 100 { 0.0 } else { 4.0 }).collect();
        let p: Vec<f64> = (0..n)
            .map(|t| if t < 100 { 0.0 } else { 4.0 * (1.0 - (-((t - 100) as f64) * period / tau).exp()) })
            .collect();
        let r = transient_response(&p, &y, 1.0, period, None).unwrap();
        assert_eq!(r.events.len(), 1);
        let t90 = r.events[0].t90.unwrap();
        assert!((t90 - 2.303 * tau).abs() <= period, "tau {tau}: t90 {t90}");
    }
}

#[test]
fn support_count_varies_with_c_against_refits() {
    let mut r = common::rng(3);
    let x = common::random_matrix(&mut r, 120, 2, 2.0);
    let y: Vec<f64> = (0..120).map(|i| (1.5 * x.get(i, 0)).sin() + 0.3 * x.get(i, 1) + 0.2 * (i % 7) as f64 / 7.0).collect();
    let cs = [0.01, 0.1, 1.0, 10.0, 100.0];
    let mut rows = Vec::new();
    for &c in &cs {
        let m = svr_fit(&x, &y, &SvrParams::new(c, 0.5, 0.05)).unwrap();
        rows.push(SvScanRow { c, gamma: 0.5, epsilon: 0.05, n_sv: m.n_support(), val_mae: 0.0, test_mae: 0.0 });
    }
    let scan = sv_tradeoff_scan(&rows).unwrap();
    for row in &scan {
        let refit = svr_fit(&x, &y, &SvrParams::new(row.c, row.gamma, row.epsilon)).unwrap();
        assert_eq!(refit.n_support(), row.n_sv);
    }
    let max = scan.iter().map(|r| r.n_sv).max().unwrap() as f64;
    let min = scan.iter().map(|r| r.n_sv).min().unwrap().max(1) as f64;
    assert!(max / min >= 1.5, "n_SV range {min}..{max}");
}
