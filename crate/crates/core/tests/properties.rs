use std::f64::consts::PI;

use proptest::prelude::*;

use ssa_core::diagnostics::{esprit_frequencies, lr_w_correlation, tau_rank_closeness, w_correlation};
use ssa_core::oblique::{lr_svd, orthonormalizer_from_basis, InnerProduct};
use ssa_core::pipeline::{run_pipeline, Method, PipelineSpec};
use ssa_core::{basic_ssa, embed, hankelize, unembed, DMatrix, Grouping, TimeSeries};

fn series(values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(values).unwrap()
}

fn sine(amp: f64, freq: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| amp * (2.0 * PI * freq * i as f64).sin()).collect()
}

/// Series long enough for a window in `2..=len/2`.
fn series_and_window() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (8usize..60).prop_flat_map(|n| (prop::collection::vec(-10.0..10.0f64, n), 2..=n / 2))
}

/// Well-conditioned square matrix: identity plus a small perturbation.
fn near_identity(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-0.3..0.3f64, n * n)
        .prop_map(move |v| DMatrix::identity(n, n) + DMatrix::from_vec(n, n, v))
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedding_round_trips((x, l) in series_and_window()) {
        let t = embed(&series(x.clone()), l).unwrap();
        prop_assert!(t.is_hankel());
        let back = unembed(t.matrix());
        prop_assert!(back.max_abs_diff(&series(x)) < 1e-12);
    }

    #[test]
    fn hankelization_is_idempotent(rows in 2usize..8, cols in 2usize..8, seed in prop::collection::vec(-5.0..5.0f64, 64)) {
        let m = DMatrix::from_fn(rows, cols, |i, j| seed[(i * cols + j) % seed.len()] * (1.0 + j as f64));
        let once = hankelize(&m).into_matrix();
        let twice = hankelize(&once).into_matrix();
        prop_assert!(close(&twice, &once) < 1e-12);
        // the residual is orthogonal to every Hankel matrix, in particular to `once`
        let dot: f64 = (m - &once).component_mul(&once).sum();
        prop_assert!(dot.abs() <= 1e-10 * once.norm_squared().max(1.0));
    }

    #[test]
    fn w_correlation_is_a_symmetric_cosine((x, l) in series_and_window(), shift in -3.0..3.0f64) {
        let y = series(x.clone());
        let z = series(x.iter().enumerate().map(|(i, v)| v * (i as f64 * 0.7).cos() + shift).collect());
        if let (Ok(a), Ok(b)) = (w_correlation(&y, &z, l), w_correlation(&z, &y, l)) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a.abs() <= 1.0 + 1e-12);
            prop_assert!((w_correlation(&y, &y, l).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basic_ssa_components_sum_to_input((x, l) in series_and_window()) {
        let y = series(x.clone());
        let k = x.len() - l + 1;
        let count = l.min(k).min(4);
        let g = Grouping::elementary(count);
        let res = basic_ssa(&y, l, &g).unwrap();
        let total = res.components.iter().fold(res.residual.clone(), |acc, c| acc.add(c));
        prop_assert!(total.max_abs_diff(&y) < 1e-9 * (1.0 + y.norm()));
    }

    #[test]
    fn tau_is_monotone_in_rank((x, l) in series_and_window()) {
        let y = series(x);
        let k = y.len() - l + 1;
        let mut prev = f64::INFINITY;
        for r in 1..=l.min(k) {
            let Ok(tau) = tau_rank_closeness(&y, l, r) else { return Ok(()) };
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&tau));
            prop_assert!(tau <= prev + 1e-12);
            prev = tau;
        }
        prop_assert!(prev.abs() < 1e-9);
    }

    #[test]
    fn lr_svd_reconstructs_and_is_biorthonormal(
        y in prop::collection::vec(-3.0..3.0f64, 20),
        a in near_identity(4),
        b in near_identity(5),
    ) {
        let y = DMatrix::from_vec(4, 5, y);
        let left = InnerProduct::from_factor(a).unwrap();
        let right = InnerProduct::from_factor(b).unwrap();
        let d = lr_svd(&y, &left, &right).unwrap();
        prop_assert!(close(&d.reconstruct(), &y) < 1e-10);
        let p = d.left_matrix(&(0..d.len()).collect::<Vec<_>>());
        let q = d.right_matrix(&(0..d.len()).collect::<Vec<_>>());
        let id = DMatrix::<f64>::identity(d.len(), d.len());
        prop_assert!((p.transpose() * left.matrix() * &p - &id).amax() < 1e-9);
        prop_assert!((q.transpose() * right.matrix() * &q - &id).amax() < 1e-9);
        // Pythagoras in the oblique Frobenius norm
        let core = right.apply(&left.apply(&y).transpose());
        let energy: f64 = d.sigmas().iter().map(|s| s * s).sum();
        prop_assert!((core.norm_squared() - energy).abs() <= 1e-9 * energy.max(1.0));
        prop_assert!(d.sigmas().windows(2).all(|w| w[0] >= w[1]));
        if d.len() >= 2 {
            let c = lr_w_correlation(&d.triples()[0].matrix(), &d.triples()[1].matrix(), &left, &right).unwrap();
            prop_assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn identity_lr_svd_is_the_svd(y in prop::collection::vec(-3.0..3.0f64, 24)) {
        let y = DMatrix::from_vec(4, 6, y);
        let d = lr_svd(&y, &InnerProduct::identity(4), &InnerProduct::identity(6)).unwrap();
        let mut reference: Vec<f64> = y.clone().singular_values().iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (s, r) in d.sigmas().iter().zip(&reference) {
            prop_assert!((s - r).abs() <= 1e-10 * reference[0]);
        }
    }

    #[test]
    fn true_trajectory_spaces_separate_exactly(
        n in 60usize..110,
        w1 in 0.05..0.2f64,
        gap in 0.05..0.2f64,
        a1 in 0.5..2.0f64,
        a2 in 0.5..2.0f64,
    ) {
        let w2 = w1 + gap;
        let l = n / 2;
        let (x1, x2) = (sine(a1, w1, n), sine(a2, w2, n));
        let t1 = embed(&series(x1.clone()), l).unwrap();
        let t2 = embed(&series(x2.clone()), l).unwrap();
        let s1 = ssa_core::linalg::thin_svd(t1.matrix()).truncate(2);
        let s2 = ssa_core::linalg::thin_svd(t2.matrix()).truncate(2);
        let stack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows(), 4);
            m.columns_mut(0, 2).copy_from(a);
            m.columns_mut(2, 2).copy_from(&(b * 10.0));
            m
        };
        let left = orthonormalizer_from_basis(&stack(&s1.u, &s2.u)).unwrap();
        let right = orthonormalizer_from_basis(&stack(&s1.v, &s2.v)).unwrap();
        let y = t1.matrix() + t2.matrix();
        let part = Grouping::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let out = ssa_core::nested_ossa(&y, &left, &right, &part).unwrap();
        prop_assert!(out.components[0].max_abs_diff(&series(x1)) < 1e-8);
        prop_assert!(out.components[1].max_abs_diff(&series(x2)) < 1e-8);
    }

    #[test]
    fn esprit_recovers_frequencies(n in 40usize..100, w1 in 0.03..0.2f64, gap in 0.04..0.2f64) {
        let w2 = w1 + gap;
        let x: Vec<f64> = sine(1.0, w1, n).iter().zip(sine(0.8, w2, n)).map(|(a, b)| a + b).collect();
        let l = n / 2;
        let svd = ssa_core::linalg::thin_svd(embed(&series(x), l).unwrap().matrix()).truncate(4);
        let roots = esprit_frequencies(&svd.u).unwrap();
        prop_assert_eq!(roots.frequencies.len(), 2);
        prop_assert!((roots.frequencies[0] - w1).abs() < 1e-8);
        prop_assert!((roots.frequencies[1] - w2).abs() < 1e-8);
        prop_assert!(roots.moduli.iter().all(|m| (m - 1.0).abs() < 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pipelines_are_deterministic(seed in 0u64..1000, method in 0usize..3) {
        let n = 80;
        let x: Vec<f64> = (1..=n)
            .map(|i| {
                let t = i as f64;
                (2.0 * PI * t / 10.0).sin() + 0.8 * (2.0 * PI * t / 7.0).sin() + 0.05 * ((seed as f64 + t) * 12.9898).sin()
            })
            .collect();
        let method = [Method::Basic, Method::Iossa, Method::Deriv][method];
        let mut spec = PipelineSpec::new(30, "1,2;3,4".parse().unwrap(), method);
        if method == Method::Deriv {
            spec.gamma = Some(3.0);
        }
        spec.max_iter = 20;
        let x = series(x);
        let a = run_pipeline(&x, &spec).unwrap();
        let b = run_pipeline(&x, &spec).unwrap();
        for (p, q) in a.components.iter().zip(&b.components) {
            prop_assert_eq!(p.values(), q.values());
        }
        prop_assert_eq!(a.wcor_after.values(), b.wcor_after.values());
    }
}
