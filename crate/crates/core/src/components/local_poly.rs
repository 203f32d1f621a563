//! Local cubic regression with an Epanechnikov kernel, evaluated at grid nodes.

use crate::error::{Error, Result};
use crate::linalg::{lstsq_columns, Matrix};
use crate::scalar::Real;

/// Smallest bandwidth, in grid spacings.
pub const MIN_SPACINGS: f64 = 3.5;
const GROWTH: f64 = 1.25;
const MAX_GROWTH_STEPS: usize = 40;

/// Plug-in bandwidth `c_b · (ln n / n)^{1/(2·3 + arity)}` for `n` samples.
pub fn bandwidth(c_b: f64, samples: usize, arity: usize, spacing: f64) -> f64 {
    let n = samples.max(2) as f64;
    let h = c_b * (n.ln() / n).powf(1.0 / (6 + arity) as f64);
    h.max(MIN_SPACINGS * spacing)
}

fn epanechnikov(u: f64) -> f64 {
    if u.abs() < 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Weighted least squares for the intercept; `rows` are `(monomials, value, weight)`.
fn intercept<T: Real>(rows: &[(Vec<f64>, T, f64)], p: usize) -> Option<T> {
    let used: Vec<&(Vec<f64>, T, f64)> = rows.iter().filter(|r| r.2 > 0.0).collect();
    if used.len() < p {
        return None;
    }
    let a = Matrix::from_fn(used.len(), p, |i, j| T::lit(used[i].2.sqrt() * used[i].0[j]));
    let y: Vec<T> = used.iter().map(|r| T::lit(r.2.sqrt()) * r.1).collect();
    let cols: Vec<usize> = (0..p).collect();
    lstsq_columns(&a, &cols, &y).map(|c| c[0])
}

/// Smoothed values at `nodes` from samples `values` taken at the same nodes.
pub fn smooth_1d<T: Real>(nodes: &[T], values: &[T], h: f64) -> Result<Vec<T>> {
    if nodes.len() != values.len() {
        return Err(Error::Dimension(format!("{} nodes, {} values", nodes.len(), values.len())));
    }
    let xs: Vec<f64> = nodes.iter().map(|v| v.as_f64()).collect();
    xs.iter()
        .map(|&x0| {
            let mut bw = h;
            for _ in 0..MAX_GROWTH_STEPS {
                let rows: Vec<(Vec<f64>, T, f64)> = xs
                    .iter()
                    .zip(values)
                    .map(|(&x, &v)| {
                        let u = (x - x0) / bw;
                        (vec![1.0, u, u * u, u * u * u], v, epanechnikov(u))
                    })
                    .collect();
                if let Some(c) = intercept(&rows, 4) {
                    return Ok(c);
                }
                bw *= GROWTH;
            }
            Err(Error::Fit(format!("local cubic fit at {x0} is rank deficient")))
        })
        .collect()
}

/// Smoothed values on the square grid `nodes × nodes`; `values.get(i, j)` is the sample at `(t_i, t_j)`.
pub fn smooth_2d<T: Real>(nodes: &[T], values: &Matrix<T>, h: f64) -> Result<Matrix<T>> {
    let n = nodes.len();
    if values.rows() != n || values.cols() != n {
        return Err(Error::Dimension(format!("{n} nodes for a {}x{} grid", values.rows(), values.cols())));
    }
    let xs: Vec<f64> = nodes.iter().map(|v| v.as_f64()).collect();
    let mut out = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut bw = h;
            let mut done = false;
            for _ in 0..MAX_GROWTH_STEPS {
                let mut rows = Vec::new();
                for i in 0..n {
                    let u = (xs[i] - xs[a]) / bw;
                    let ku = epanechnikov(u);
                    if ku == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        let v = (xs[j] - xs[b]) / bw;
                        let kv = epanechnikov(v);
                        if kv == 0.0 {
                            continue;
                        }
                        let mono = vec![1.0, u, v, u * u, u * v, v * v, u * u * u, u * u * v, u * v * v, v * v * v];
                        rows.push((mono, values.get(i, j), ku * kv));
                    }
                }
                if let Some(c) = intercept(&rows, 10) {
                    out.set(a, b, c);
                    done = true;
                    break;
                }
                bw *= GROWTH;
            }
            if !done {
                return Err(Error::Fit(format!("local cubic fit at ({}, {}) is rank deficient", xs[a], xs[b])));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubics_pass_through_unchanged() {
        let nodes: Vec<f64> = (0..21).map(|i| -1.0 + i as f64 / 10.0).collect();
        let f = |x: f64| x * x * x - 0.5 * x + 2.0;
        let v: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        let s = smooth_1d(&nodes, &v, 0.3).unwrap();
        for (x, y) in nodes.iter().zip(&s) {
            assert!((f(*x) - y).abs() < 1e-10);
        }
        let g = |x: f64, y: f64| x * y * y + x * x - y;
        let m = Matrix::from_fn(21, 21, |i, j| g(nodes[i], nodes[j]));
        let s2 = smooth_2d(&nodes, &m, 0.35).unwrap();
        assert!((s2.get(3, 17) - g(nodes[3], nodes[17])).abs() < 1e-10);
    }

    #[test]
    fn bandwidth_has_a_floor() {
        assert_eq!(bandwidth(1e-3, 100, 1, 0.02), 3.5 * 0.02);
        assert!(bandwidth(1.0, 100, 1, 0.02) > bandwidth(1.0, 10_000, 1, 0.0002));
    }
}
