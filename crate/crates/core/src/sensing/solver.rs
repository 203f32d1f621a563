//! Sparse recovery for `y = V z` with `z` sparse.
//!
//! `HardThreshold` is an accelerated hard-thresholding pursuit: a gradient
//! step from a momentum-extrapolated point, pruning to the `s` largest
//! entries, and a least-squares refit on the kept support. Steps are accepted
//! only if the residual drops, so the residual is monotone. If the pursuit
//! stalls above tolerance, it is restarted from an orthogonal matching pursuit
//! initialisation and the better result is kept.
//!
//! `L1Equality` solves `min ‖z‖₁ s.t. V z = y` by ADMM and returns a
//! least-squares polish on the detected support once the ADMM dual variable
//! certifies it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, lstsq_columns, norm2, norm_inf, Matrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    HardThreshold,
    L1Equality,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub mode: SolverMode,
    pub max_iter: usize,
    /// Absolute residual tolerance `‖Vz − y‖₂`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { mode: SolverMode::HardThreshold, max_iter: 500, tol: 1e-9 }
    }
}

const FEASIBILITY: f64 = 1e-8;

pub fn sparse_recover<T: Real>(v: &Matrix<T>, y: &[T], s: usize, opts: &SolverOptions) -> Result<Vec<T>> {
    sparse_recover_warm(v, y, s, opts, &[])
}

/// As [`sparse_recover`], trying the support `hint` first (hard-threshold mode only).
pub fn sparse_recover_warm<T: Real>(
    v: &Matrix<T>,
    y: &[T],
    s: usize,
    opts: &SolverOptions,
    hint: &[usize],
) -> Result<Vec<T>> {
    if y.len() != v.rows() {
        return Err(Error::Dimension(format!("{} measurements for a {}-row ensemble", y.len(), v.rows())));
    }
    if s == 0 {
        return Err(Error::Config("sparsity budget must be at least 1".into()));
    }
    let n = v.cols();
    if y.iter().all(|&x| x == T::zero()) {
        return Ok(vec![T::zero(); n]);
    }
    match opts.mode {
        SolverMode::HardThreshold => {
            let it = pursuit(v, y, s.min(v.rows()).min(n), opts, hint)?;
            Ok(it.dense(n))
        }
        SolverMode::L1Equality => basis_pursuit(v, y, opts),
    }
}

#[derive(Clone, Debug)]
struct Iterate<T> {
    support: Vec<usize>,
    values: Vec<T>,
    residual: Vec<T>,
    res: T,
}

impl<T: Real> Iterate<T> {
    fn zero(y: &[T]) -> Self {
        Self { support: Vec::new(), values: Vec::new(), residual: y.to_vec(), res: norm2(y) }
    }

    fn dense(&self, n: usize) -> Vec<T> {
        let mut z = vec![T::zero(); n];
        let big = norm_inf(&self.values);
        for (&i, &x) in self.support.iter().zip(&self.values) {
            // coefficients at round-off level carry no information
            if x.abs() > big * T::epsilon() * T::lit(1e3) {
                z[i] = x;
            }
        }
        z
    }

    fn get(&self, i: usize) -> T {
        match self.support.binary_search(&i) {
            Ok(k) => self.values[k],
            Err(_) => T::zero(),
        }
    }
}

fn residual_of<T: Real>(v: &Matrix<T>, y: &[T], support: &[usize], values: &[T]) -> (Vec<T>, T) {
    let vz = v.mul_sparse(support, values);
    let r: Vec<T> = y.iter().zip(&vz).map(|(&a, &b)| a - b).collect();
    let n = norm2(&r);
    (r, n)
}

/// Least-squares fit on `support` (sorted), or `None` if the columns are dependent.
fn refit<T: Real>(v: &Matrix<T>, y: &[T], mut support: Vec<usize>) -> Option<Iterate<T>> {
    support.sort_unstable();
    support.dedup();
    let values = lstsq_columns(v, &support, y)?;
    let (residual, res) = residual_of(v, y, &support, &values);
    Some(Iterate { support, values, residual, res })
}

/// Indices of the `s` largest scores, ties broken by index; zero scores are skipped.
fn top<T: Real>(mut cands: Vec<usize>, score: impl Fn(usize) -> T, s: usize) -> Vec<usize> {
    cands.retain(|&i| score(i) > T::zero());
    cands.sort_by(|&a, &b| score(b).partial_cmp(&score(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    cands.truncate(s);
    cands.sort_unstable();
    cands
}

fn pursuit<T: Real>(v: &Matrix<T>, y: &[T], s: usize, opts: &SolverOptions, hint: &[usize]) -> Result<Iterate<T>> {
    let tol = T::lit(opts.tol);
    let mut best: Option<Iterate<T>> = None;
    let mut consider = |it: Iterate<T>| -> bool {
        let done = it.res <= tol;
        if best.as_ref().is_none_or(|b| it.res < b.res) {
            best = Some(it);
        }
        done
    };

    if !hint.is_empty() {
        if let Some(start) = hinted_start(v, y, s, hint) {
            if consider(htp(v, y, s, opts, start)?) {
                return Ok(best.unwrap());
            }
        }
    }
    if consider(htp(v, y, s, opts, Iterate::zero(y))?) {
        return Ok(best.unwrap());
    }
    let start = omp(v, y, s, tol);
    consider(htp(v, y, s, opts, start)?);
    Ok(best.unwrap())
}

fn hinted_start<T: Real>(v: &Matrix<T>, y: &[T], s: usize, hint: &[usize]) -> Option<Iterate<T>> {
    let mut sup: Vec<usize> = hint.to_vec();
    sup.sort_unstable();
    sup.dedup();
    sup.truncate(v.rows());
    let it = refit(v, y, sup)?;
    if it.support.len() <= s {
        return Some(it);
    }
    let keep = top(it.support.clone(), |i| it.get(i).abs(), s);
    refit(v, y, keep)
}

fn omp<T: Real>(v: &Matrix<T>, y: &[T], s: usize, tol: T) -> Iterate<T> {
    let n = v.cols();
    let mut cur = Iterate::zero(y);
    let mut g = vec![T::zero(); n];
    while cur.support.len() < s && cur.res > tol {
        v.t_mul_vec_into(&cur.residual, &mut g);
        let next = (0..n)
            .filter(|i| cur.support.binary_search(i).is_err())
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(j) if g[j].abs() >= g[i].abs() => Some(j),
                _ => Some(i),
            });
        let Some(i) = next else { break };
        if g[i] == T::zero() {
            break;
        }
        let mut sup = cur.support.clone();
        sup.push(i);
        match refit(v, y, sup) {
            Some(it) => cur = it,
            None => break,
        }
    }
    cur
}

/// One thresholded gradient step from the point `(support, values)`, with the
/// normalised step size halved up to three times until the residual beats `target`.
fn step<T: Real>(
    v: &Matrix<T>,
    y: &[T],
    s: usize,
    support: &[usize],
    values: &[T],
    target: T,
) -> Option<Iterate<T>> {
    let n = v.cols();
    let (r, _) = residual_of(v, y, support, values);
    let g = v.t_mul_vec(&r);
    let outside: Vec<usize> = (0..n).filter(|i| support.binary_search(i).is_err()).collect();
    let mut set = top(outside, |i| g[i].abs(), s);
    set.extend_from_slice(support);
    set.sort_unstable();
    let gs: Vec<T> = set.iter().map(|&i| g[i]).collect();
    let num = gs.iter().fold(T::zero(), |a, &x| a + x * x);
    if num == T::zero() {
        return None;
    }
    let vg = v.mul_sparse(&set, &gs);
    let den = vg.iter().fold(T::zero(), |a, &x| a + x * x);
    let mut eta = if den > T::zero() { num / den } else { T::one() };
    let base = |i: usize| match support.binary_search(&i) {
        Ok(k) => values[k],
        Err(_) => T::zero(),
    };
    for _ in 0..4 {
        let w: Vec<T> = set.iter().zip(&gs).map(|(&i, &gi)| base(i) + eta * gi).collect();
        let keep = top((0..set.len()).collect(), |k| w[k].abs(), s);
        let sup: Vec<usize> = keep.iter().map(|&k| set[k]).collect();
        let cand = match refit(v, y, sup.clone()) {
            Some(it) => it,
            None => {
                let vals: Vec<T> = keep.iter().map(|&k| w[k]).collect();
                let (residual, res) = residual_of(v, y, &sup, &vals);
                Iterate { support: sup, values: vals, residual, res }
            }
        };
        if cand.res < target {
            return Some(cand);
        }
        eta = eta * T::lit(0.5);
    }
    None
}

fn htp<T: Real>(v: &Matrix<T>, y: &[T], s: usize, opts: &SolverOptions, start: Iterate<T>) -> Result<Iterate<T>> {
    let tol = T::lit(opts.tol);
    let slack = norm2(y) * T::epsilon() * T::lit(16.0);
    let mut cur = start;
    let mut prev: Option<Iterate<T>> = None;
    let mut t = T::one();
    for _ in 0..opts.max_iter {
        if cur.res <= tol {
            return Ok(cur);
        }
        let target = cur.res - slack;
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5);
        let beta = (t - T::one()) / t_next;
        let mut next = None;
        if let Some(p) = prev.as_ref().filter(|_| beta > T::zero()) {
            let mut sup: Vec<usize> = cur.support.iter().chain(&p.support).copied().collect();
            sup.sort_unstable();
            sup.dedup();
            let vals: Vec<T> = sup.iter().map(|&i| cur.get(i) + beta * (cur.get(i) - p.get(i))).collect();
            next = step(v, y, s, &sup, &vals, target);
        }
        let momentum = next.is_some();
        if next.is_none() {
            next = step(v, y, s, &cur.support, &cur.values, target);
        }
        match next {
            Some(it) if it.support != cur.support => {
                t = if momentum { t_next } else { T::one() };
                prev = Some(std::mem::replace(&mut cur, it));
            }
            _ => return Ok(cur),
        }
    }
    if cur.res <= tol {
        return Ok(cur);
    }
    Err(Error::SolverDiverged { iterations: opts.max_iter, residual: cur.res.as_f64() })
}

fn basis_pursuit<T: Real>(v: &Matrix<T>, y: &[T], opts: &SolverOptions) -> Result<Vec<T>> {
    let n = v.cols();
    let chol = cholesky(&v.gram_rows())
        .ok_or_else(|| Error::Infeasible("measurement rows are linearly dependent".into()))?;
    let project = |w: &[T]| -> Vec<T> {
        let vw = v.mul_vec(w);
        let r: Vec<T> = vw.iter().zip(y).map(|(&a, &b)| a - b).collect();
        let lam = cholesky_solve(&chol, &r);
        let corr = v.t_mul_vec(&lam);
        w.iter().zip(&corr).map(|(&a, &b)| a - b).collect()
    };
    let feas = T::lit(FEASIBILITY) * T::one().max(norm2(y));
    let mut x = project(&vec![T::zero(); n]);
    let kappa = norm_inf(&x) * T::lit(0.1);
    let soft = |a: T| {
        if a > kappa {
            a - kappa
        } else if a < -kappa {
            a + kappa
        } else {
            T::zero()
        }
    };
    let mut z: Vec<T> = x.iter().map(|&a| soft(a)).collect();
    let mut u: Vec<T> = x.iter().zip(&z).map(|(&a, &b)| a - b).collect();
    let mut last_support: Vec<usize> = Vec::new();
    for _ in 0..opts.max_iter {
        let w: Vec<T> = z.iter().zip(&u).map(|(&a, &b)| a - b).collect();
        x = project(&w);
        for i in 0..n {
            z[i] = soft(x[i] + u[i]);
            u[i] = u[i] + x[i] - z[i];
        }
        // u lies in range(Vᵀ) and u/κ is a subgradient of ‖·‖₁ at z, so a
        // feasible point with z's support and signs is an ℓ1 minimiser.
        let support: Vec<usize> = (0..n).filter(|&i| z[i] != T::zero()).collect();
        if !support.is_empty() && support == last_support && support.len() <= v.rows() {
            if let Some(vals) = lstsq_columns(v, &support, y) {
                let (_, res) = residual_of(v, y, &support, &vals);
                let signs_agree = support.iter().zip(&vals).all(|(&i, &a)| a == T::zero() || (a > T::zero()) == (z[i] > T::zero()));
                if res <= feas && signs_agree {
                    let mut out = vec![T::zero(); n];
                    for (&i, &a) in support.iter().zip(&vals) {
                        out[i] = a;
                    }
                    return Ok(out);
                }
            }
        }
        last_support = support;
        let gap = x.iter().zip(&z).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        if gap <= feas * T::lit(1e-2) && norm_inf(&x) > T::zero() {
            let snapped: Vec<T> = x.iter().map(|&a| if a.abs() <= feas { T::zero() } else { a }).collect();
            return Ok(snapped);
        }
    }
    let gap = x.iter().zip(&z).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    Err(Error::SolverDiverged { iterations: opts.max_iter, residual: gap.as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sensing::draw_ensemble;

    fn instance(seed: u64, m: usize, d: usize, support: &[(usize, f64)]) -> (Matrix<f64>, Vec<f64>, Vec<f64>) {
        let v = draw_ensemble::<f64, _>(m, d, &mut rng::stream(seed, 0)).matrix;
        let mut w = vec![0.0; d];
        for &(i, a) in support {
            w[i] = a;
        }
        let y = v.mul_vec(&w);
        (v, w, y)
    }

    #[test]
    fn zero_measurements_give_zero() {
        let v = draw_ensemble::<f64, _>(5, 8, &mut rng::stream(0, 0)).matrix;
        for mode in [SolverMode::HardThreshold, SolverMode::L1Equality] {
            let o = SolverOptions { mode, ..Default::default() };
            assert_eq!(sparse_recover(&v, &[0.0; 5], 2, &o).unwrap(), vec![0.0; 8]);
        }
    }

    #[test]
    fn one_sparse_in_ten_dimensions() {
        // exhaustive oracle: the 1-sparse candidate with the smallest residual
        let (v, w, y) = instance(11, 8, 10, &[(2, 5.0)]);
        let best = (0..10)
            .map(|j| {
                let c = v.column(j);
                let a = crate::linalg::dot(&c, &y) / crate::linalg::dot(&c, &c);
                let r: f64 = c.iter().zip(&y).map(|(ci, yi)| (yi - a * ci).powi(2)).sum();
                (r, j, a)
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        assert_eq!((best.1, (best.2 - 5.0).abs() < 1e-12), (2, true));
        for mode in [SolverMode::HardThreshold, SolverMode::L1Equality] {
            let z = sparse_recover(&v, &y, 1, &SolverOptions { mode, ..Default::default() }).unwrap();
            for (a, b) in z.iter().zip(&w) {
                assert!((a - b).abs() < 1e-6, "{mode:?}: {z:?}");
            }
        }
    }

    #[test]
    fn budget_is_respected_and_residual_small() {
        let (v, _, y) = instance(4, 30, 60, &[(3, 1.0), (17, -2.0), (40, 0.5), (41, 3.0)]);
        let z = sparse_recover(&v, &y, 4, &SolverOptions::default()).unwrap();
        assert!(z.iter().filter(|&&x| x != 0.0).count() <= 4);
        let r: Vec<f64> = v.mul_vec(&z).iter().zip(&y).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-9);
    }

    #[test]
    fn warm_start_with_true_support() {
        let (v, w, y) = instance(5, 20, 80, &[(10, 1.5), (70, -1.0)]);
        let z = sparse_recover_warm(&v, &y, 3, &SolverOptions::default(), &[10, 70]).unwrap();
        for (a, b) in z.iter().zip(&w) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_lengths_error() {
        let v = draw_ensemble::<f64, _>(5, 8, &mut rng::stream(0, 0)).matrix;
        assert!(matches!(sparse_recover(&v, &[1.0; 4], 1, &SolverOptions::default()), Err(Error::Dimension(_))));
    }
}
