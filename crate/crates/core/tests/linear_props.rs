mod common;

use calibench::linear::{fit_mlr, RidgeSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_are_orthogonal(n in 10usize..60, p in 1usize..6, seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let x = common::random_matrix(&mut r, n, p, 3.0);
        let y = common::random_vec(&mut r, n, 5.0);
        let m = fit_mlr(&x, &y, RidgeSpec::NONE).unwrap();
        let res: Vec<f64> = (0..n).map(|i| y[i] - m.predict_row(x.row(i))).collect();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(res.iter().sum::<f64>().abs() < 1e-8 * ynorm);
        for j in 0..p {
            let d: f64 = (0..n).map(|i| x.get(i, j) * res[i]).sum();
            prop_assert!(d.abs() < 1e-8 * ynorm);
        }
    }

    #[test]
    fn ridge_shrinks_coefficients(seed in 0u64..10_000, l1 in 0.0f64..5.0, dl in 1e-3f64..5.0) {
        let mut r = common::rng(seed);
        let x = common::random_matrix(&mut r, 30, 4, 1.0);
        let y = common::random_vec(&mut r, 30, 2.0);
        let norm = |l: f64| {
            let m = fit_mlr(&x, &y, RidgeSpec::new(l).unwrap()).unwrap();
            m.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
        };
        prop_assert!(norm(l1) >= norm(l1 + dl) - 1e-12);
    }

    #[test]
    fn prediction_is_affine(seed in 0u64..10_000, a in -3.0f64..3.0) {
        let mut r = common::rng(seed);
        let x = common::random_matrix(&mut r, 25, 3, 1.0);
        let y = common::random_vec(&mut r, 25, 1.0);
        let m = fit_mlr(&x, &y, RidgeSpec::NONE).unwrap();
        let u = common::random_vec(&mut r, 3, 2.0);
        let v = common::random_vec(&mut r, 3, 2.0);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + (1.0 - a) * q).collect();
        let lhs = m.predict_row(&mix);
        let rhs = a * m.predict_row(&u) + (1.0 - a) * m.predict_row(&v);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }
}
