use gspam::linalg::{lstsq_columns, Matrix};
use gspam::rng;
use gspam::sensing::{draw_ensemble, sparse_recover, SolverMode, SolverOptions};
use rand::seq::index::sample;
use rand::Rng;

/// Support of size 2 minimising the least-squares residual, by enumeration.
fn exhaustive_two_sparse(v: &Matrix<f64>, y: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let d = v.cols();
    let mut best = (f64::INFINITY, vec![], vec![]);
    for i in 0..d {
        for j in i + 1..d {
            // collinear column pairs cannot be told apart; skip them
            let Some(z) = lstsq_columns(v, &[i, j], y) else { continue };
            let r: f64 = (0..v.rows())
                .map(|k| (y[k] - v.get(k, i) * z[0] - v.get(k, j) * z[1]).powi(2))
                .sum();
            if r < best.0 {
                best = (r, vec![i, j], z);
            }
        }
    }
    (best.1, best.2)
}

fn match_rate(mode: SolverMode) -> (usize, f64) {
    let (d, m) = (20, 12);
    let mut matches = 0;
    let mut used = 0;
    let mut worst = 0.0f64;
    for t in 0.. {
        if used == 100 {
            break;
        }
        let mut r = rng::stream(99, t);
        let v = draw_ensemble::<f64, _>(m, d, &mut r).matrix;
        let mut idx = sample(&mut r, d, 2).into_vec();
        idx.sort_unstable();
        if lstsq_columns(&v, &idx, &vec![0.0; m]).is_none() {
            // the true support itself is not identifiable; draw a new instance
            continue;
        }
        let mut w = vec![0.0; d];
        for &i in &idx {
            let mag: f64 = r.gen_range(0.5..5.0);
            w[i] = if r.gen::<bool>() { mag } else { -mag };
        }
        let y = v.mul_vec(&w);
        used += 1;
        let (sup, vals) = exhaustive_two_sparse(&v, &y);
        let z = sparse_recover(&v, &y, 2, &SolverOptions { mode, ..Default::default() }).unwrap();
        let got: Vec<usize> = (0..d).filter(|&i| z[i] != 0.0).collect();
        if got == sup {
            matches += 1;
            for (k, &i) in sup.iter().enumerate() {
                worst = worst.max((z[i] - vals[k]).abs());
            }
        }
    }
    eprintln!("{mode:?}: {matches}/100 supports match, worst value error {worst:e}");
    (matches, worst)
}

#[test]
fn hard_threshold_matches_exhaustive_search() {
    let (matches, worst) = match_rate(SolverMode::HardThreshold);
    assert!(matches >= 99, "{matches}/100");
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn l1_matches_exhaustive_search_on_most_instances() {
    // ℓ1 recovery of 2-sparse vectors from 12 of 20 measurements is not
    // guaranteed; require a clear majority
    let (matches, worst) = match_rate(SolverMode::L1Equality);
    assert!(matches >= 80, "{matches}/100");
    assert!(worst <= 1e-6, "{worst}");
}
