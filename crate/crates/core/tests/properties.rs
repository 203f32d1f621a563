use std::sync::Arc;

use gspam::components::{center_surface, Basis, Spline1, Spline2};
use gspam::hashing::build_hash_family;
use gspam::linalg::Matrix;
use gspam::model::{make_benchmark, Benchmark, CenteringCase, ComponentFunction, GroundTruthModel, NoiseMode, QueryOracle};
use gspam::recovery::{resampling_count, RecoveryConfig};
use gspam::rng;
use gspam::sensing::{draw_ensemble, gradient_measurements, sparse_recover, SolverOptions};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn indicator_vectors_partition_the_coordinates(d in 2usize..300, seed in any::<u64>()) {
        let size = (d as f64).log2().ceil() as usize + 2;
        let fam = build_hash_family(d, size, &mut rng::stream(seed, 0)).unwrap();
        prop_assert!(fam.separates_all_pairs());
        for h in 0..fam.len() {
            let (e1, e2) = fam.indicator_vectors::<f64>(h).unwrap();
            prop_assert!(e1.iter().zip(&e2).all(|(a, b)| a + b == 1.0));
        }
    }

    #[test]
    fn solver_respects_the_budget(seed in any::<u64>(), s in 1usize..5) {
        let v = draw_ensemble::<f64, _>(24, 60, &mut rng::stream(seed, 1));
        let mut r = rng::stream(seed, 2);
        let y: Vec<f64> = (0..24).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = sparse_recover(&v.matrix, &y, s, &SolverOptions::default());
        if let Ok(x) = x {
            prop_assert!(x.iter().filter(|v| **v != 0.0).count() <= s);
        }
    }

    #[test]
    fn sparse_gradients_are_recovered(seed in any::<u64>()) {
        let v = draw_ensemble::<f64, _>(40, 80, &mut rng::stream(seed, 1));
        let mut r = rng::stream(seed, 2);
        let mut x = vec![0.0; 80];
        for _ in 0..3 {
            x[r.gen_range(0..80)] = r.gen_range(1.0..4.0) * if r.gen::<bool>() { 1.0 } else { -1.0 };
        }
        let y = v.matrix.mul_vec(&x);
        let z = sparse_recover(&v.matrix, &y, 3, &SolverOptions::default()).unwrap();
        prop_assert!(z.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn central_differences_are_exact_on_quadratics(seed in any::<u64>(), mu in 0.01f64..0.5) {
        let uni = vec![(1, ComponentFunction::univariate(|x: f64| 3.0 * x * x - x, 6.0))];
        let bi = vec![((2, 5), ComponentFunction::bivariate(|x: f64, y: f64| -2.0 * x * y + y * y, 6.0))];
        let m = GroundTruthModel::new(8, uni, bi, 2.0).unwrap();
        let o = QueryOracle::new(Arc::new(m), NoiseMode::None, 0);
        let mut r = rng::stream(seed, 3);
        let x: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let v = draw_ensemble::<f64, _>(6, 8, &mut r);
        let grad = [0.0, 6.0 * x[1] - 1.0, -2.0 * x[5], 0.0, 0.0, -2.0 * x[2] + 2.0 * x[5], 0.0, 0.0];
        let y = gradient_measurements(&o, &x, &v, mu, None, 1, 0).unwrap();
        for (j, yj) in y.values.iter().enumerate() {
            let exact: f64 = v.direction(j).iter().zip(&grad).map(|(a, b)| a * b).sum();
            prop_assert!((yj - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_interpolant_reproduces_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, n in 3usize..40) {
        let f = |x: f64| a + b * x + c * x * x;
        let nodes = Basis::<f64>::new(n).unwrap().nodes();
        let s = Spline1::fit(&nodes.iter().map(|&x| f(x)).collect::<Vec<_>>()).unwrap();
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            prop_assert!((s.eval(x) - f(x)).abs() < 1e-10);
        }
        prop_assert!((s.mean() - (a + c / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn surface_centering_is_idempotent(seed in any::<u64>(), n in 3usize..12) {
        let mut r = rng::stream(seed, 4);
        let vals = Matrix::from_fn(n, n, |_, _| r.gen_range(-3.0f64..3.0));
        for case in [CenteringCase::Joint, CenteringCase::First, CenteringCase::Second, CenteringCase::Both] {
            let mut once = Spline2::fit(&vals).unwrap();
            center_surface(&mut once, case);
            let mut twice = once.clone();
            center_surface(&mut twice, case);
            for (p, q) in once.coeffs.as_slice().iter().zip(twice.coeffs.as_slice()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn centering_preserves_the_function(seed in any::<u64>(), t in 1usize..4) {
        let m = make_benchmark::<f64>(Benchmark::F4, 40, t + 1, seed).unwrap();
        let c = m.center_components(32).unwrap();
        prop_assert!(c.is_centered());
        let again = c.center_components(32).unwrap();
        let mut r = rng::stream(seed, 5);
        for _ in 0..10 {
            let x: Vec<f64> = (0..40).map(|_| r.gen_range(-1.0..1.0)).collect();
            let fx = m.evaluate(&x).unwrap();
            prop_assert!((c.evaluate(&x).unwrap() - fx).abs() < 1e-8);
            prop_assert!((again.evaluate(&x).unwrap() - fx).abs() < 1e-8);
        }
    }

    #[test]
    fn resampling_grows_with_variance(s1 in 1e-3f64..0.05, factor in 1.1f64..4.0) {
        let count = 129.0 * 63.0 * 9.0 * 11.0;
        prop_assert!(resampling_count(s1 * factor, 0.005, 0.01, count) >= resampling_count(s1, 0.005, 0.01, count));
    }
}

use rand::Rng;

#[test]
fn single_precision_pipeline_recovers_f1() {
    let m = make_benchmark::<f32>(Benchmark::F1, 60, 0, 0).unwrap();
    let oracle = QueryOracle::new(Arc::new(m), NoiseMode::None, 0);
    let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6f32, 0.1, 7);
    let est = gspam::recovery::recover_supports(&oracle, &cfg).unwrap();
    assert!(est.matches(&[0, 1], &[(2, 3), (3, 4)]), "{:?} {:?}", est.s1, est.s2);
}
