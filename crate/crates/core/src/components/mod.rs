//! Component estimation once the supports are known.
//!
//! Each component is sampled on a small subspace grid (all other coordinates
//! at 0), fitted by a quadratic spline quasi-interpolant (or a local cubic
//! smoother first, under Gaussian noise) and then centred so that it matches
//! the unique ANOVA layout of the model. Centering happens on the spline
//! coefficients, using exact basis integrals.

mod local_poly;
mod spline;

pub use local_poly::{bandwidth, smooth_1d, smooth_2d, MIN_SPACINGS};
pub use spline::{bspline2, bspline2_cdf, Basis, Spline1, Spline2};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CenteringCase, ComponentFunction, QueryOracle};
use crate::rng;
use crate::scalar::Real;

/// Which component is being estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum ComponentTarget {
    Univariate(usize),
    Bivariate(usize, usize),
    /// Univariate part of a variable with more than one interaction partner.
    Marginal(usize),
}

impl ComponentTarget {
    pub fn arity(&self) -> usize {
        match self {
            Self::Bivariate(..) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ComponentTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Univariate(p) => write!(f, "univariate:{p}"),
            Self::Bivariate(l, m) => write!(f, "bivariate:{l}-{m}"),
            Self::Marginal(l) => write!(f, "marginal:{l}"),
        }
    }
}

/// Sample points for `target` with `n` nodes per axis.
///
/// Univariate: coordinate `p` runs over the nodes. Bivariate: `(l, l')` runs
/// over the `n × n` grid, row-major in `l`. Marginal: `x_l = t_i` and every
/// other variable of `s2var` equals `t_j`. All remaining coordinates are 0.
pub fn sample_component_grid<T: Real>(
    target: ComponentTarget,
    n: usize,
    d: usize,
    s2var: &BTreeSet<usize>,
) -> Result<Vec<Vec<T>>> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 nodes per axis, got {n}")));
    }
    let t: Vec<T> = (0..n).map(|i| T::lit(-1.0 + 2.0 * i as f64 / (n - 1) as f64)).collect();
    let check = |i: usize| if i < d { Ok(()) } else { Err(Error::IndexOutOfRange { index: i, size: d }) };
    match target {
        ComponentTarget::Univariate(p) => {
            check(p)?;
            Ok(t.iter()
                .map(|&v| {
                    let mut x = vec![T::zero(); d];
                    x[p] = v;
                    x
                })
                .collect())
        }
        ComponentTarget::Bivariate(l, m) => {
            check(l)?;
            check(m)?;
            if l == m {
                return Err(Error::Config(format!("pair ({l}, {m}) repeats a variable")));
            }
            let mut pts = Vec::with_capacity(n * n);
            for &a in &t {
                for &b in &t {
                    let mut x = vec![T::zero(); d];
                    x[l] = a;
                    x[m] = b;
                    pts.push(x);
                }
            }
            Ok(pts)
        }
        ComponentTarget::Marginal(l) => {
            check(l)?;
            if !s2var.contains(&l) {
                return Err(Error::Config(format!("variable {l} has no interaction partner")));
            }
            for &q in s2var {
                check(q)?;
            }
            let mut pts = Vec::with_capacity(n * n);
            for &a in &t {
                for &b in &t {
                    let mut x = vec![T::zero(); d];
                    for &q in s2var {
                        x[q] = b;
                    }
                    x[l] = a;
                    pts.push(x);
                }
            }
            Ok(pts)
        }
    }
}

/// How sampled values are turned into a spline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FitMethod {
    /// Spline quasi-interpolation of the raw values (noiseless or bounded noise).
    QuasiInterpolant,
    /// Local cubic smoothing at the nodes, then quasi-interpolation (Gaussian noise).
    LocalPolynomial { bandwidth_constant: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Fitted<T> {
    Curve(Spline1<T>),
    Surface(Spline2<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentEstimate<T> {
    pub target: ComponentTarget,
    pub fitted: Fitted<T>,
    pub centering: CenteringCase,
    pub n_samples: usize,
}

impl<T: Real> ComponentEstimate<T> {
    pub fn arity(&self) -> usize {
        self.target.arity()
    }

    /// Curve value; `NaN` for surfaces.
    pub fn eval1(&self, x: T) -> T {
        match &self.fitted {
            Fitted::Curve(s) => s.eval(x),
            Fitted::Surface(_) => T::nan(),
        }
    }

    /// Surface value; `NaN` for curves.
    pub fn eval2(&self, x: T, y: T) -> T {
        match &self.fitted {
            Fitted::Surface(s) => s.eval(x, y),
            Fitted::Curve(_) => T::nan(),
        }
    }

    /// Contribution to `f` at a full point.
    pub fn eval_point(&self, x: &[T]) -> T {
        match self.target {
            ComponentTarget::Univariate(p) | ComponentTarget::Marginal(p) => self.eval1(x[p]),
            ComponentTarget::Bivariate(l, m) => self.eval2(x[l], x[m]),
        }
    }

    /// Knot vector shared by every axis.
    pub fn knots(&self) -> Vec<T> {
        match &self.fitted {
            Fitted::Curve(s) => s.basis.knots(),
            Fitted::Surface(s) => s.basis.knots(),
        }
    }

    /// Coefficients, row-major for surfaces.
    pub fn coefficients(&self) -> Vec<T> {
        match &self.fitted {
            Fitted::Curve(s) => s.coeffs.clone(),
            Fitted::Surface(s) => s.coeffs.as_slice().to_vec(),
        }
    }
}

fn node_values_1d<T: Real>(values: &[T], method: FitMethod) -> Result<Vec<T>> {
    match method {
        FitMethod::QuasiInterpolant => Ok(values.to_vec()),
        FitMethod::LocalPolynomial { bandwidth_constant } => {
            let basis = Basis::<T>::new(values.len())?;
            let h = bandwidth(bandwidth_constant, values.len(), 1, basis.h.as_f64());
            smooth_1d(&basis.nodes(), values, h)
        }
    }
}

fn node_values_2d<T: Real>(values: &[T], method: FitMethod) -> Result<Matrix<T>> {
    let n = (values.len() as f64).sqrt().round() as usize;
    if n * n != values.len() {
        return Err(Error::Fit(format!("{} samples do not form a square grid", values.len())));
    }
    let grid = Matrix::from_vec(n, n, values.to_vec());
    match method {
        FitMethod::QuasiInterpolant => Ok(grid),
        FitMethod::LocalPolynomial { bandwidth_constant } => {
            let basis = Basis::<T>::new(n)?;
            let h = bandwidth(bandwidth_constant, n * n, 2, basis.h.as_f64());
            smooth_2d(&basis.nodes(), &grid, h)
        }
    }
}

/// Fits and centres one component from values laid out as in [`sample_component_grid`].
/// `case` is used for bivariate targets only.
pub fn fit_component<T: Real>(
    target: ComponentTarget,
    values: &[T],
    case: CenteringCase,
    method: FitMethod,
) -> Result<ComponentEstimate<T>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit(format!("non-finite sample for {target}")));
    }
    let (fitted, centering) = match target {
        ComponentTarget::Univariate(_) => {
            let mut s = Spline1::fit(&node_values_1d(values, method)?)?;
            let m = s.mean();
            s.shift(m);
            (Fitted::Curve(s), CenteringCase::Univariate)
        }
        ComponentTarget::Marginal(_) => {
            let s = Spline2::fit(&node_values_2d(values, method)?)?;
            let total = s.mean();
            let coeffs = s.mean_over_second().into_iter().map(|c| c - total).collect();
            (Fitted::Curve(Spline1 { basis: s.basis, coeffs }), CenteringCase::Marginal)
        }
        ComponentTarget::Bivariate(..) => {
            if matches!(case, CenteringCase::Univariate | CenteringCase::Marginal) {
                return Err(Error::Config(format!("{case:?} is not a bivariate centering rule")));
            }
            let mut s = Spline2::fit(&node_values_2d(values, method)?)?;
            center_surface(&mut s, case);
            (Fitted::Surface(s), case)
        }
    };
    Ok(ComponentEstimate { target, fitted, centering, n_samples: values.len() })
}

/// Applies a bivariate centering rule to the coefficients of `s`.
pub fn center_surface<T: Real>(s: &mut Spline2<T>, case: CenteringCase) {
    let total = s.mean();
    let over_first = s.mean_over_first();
    let over_second = s.mean_over_second();
    let m = s.basis.len();
    for i in 0..m {
        for j in 0..m {
            let c = s.coeffs.get(i, j);
            let v = match case {
                CenteringCase::Joint => c - total,
                CenteringCase::First => c - over_first[j],
                CenteringCase::Second => c - over_second[i],
                CenteringCase::Both => c - over_first[j] - over_second[i] + total,
                CenteringCase::Univariate | CenteringCase::Marginal => c,
            };
            s.coeffs.set(i, j, v);
        }
    }
}

/// Max absolute deviation on an equispaced `grid_n` (per axis) grid over `[-1, 1]^arity`.
pub fn sup_error<T: Real>(estimate: &ComponentEstimate<T>, truth: &ComponentFunction<T>, grid_n: usize) -> Result<T> {
    if estimate.arity() != truth.arity() {
        return Err(Error::Dimension(format!(
            "estimate of arity {} against a truth of arity {}",
            estimate.arity(),
            truth.arity()
        )));
    }
    let g = grid_n.max(2);
    let x = |i: usize| T::lit(-1.0 + 2.0 * i as f64 / (g - 1) as f64);
    let mut worst = T::zero();
    if truth.arity() == 1 {
        for i in 0..g {
            worst = worst.max((estimate.eval1(x(i)) - truth.eval1(x(i))).abs());
        }
    } else {
        for i in 0..g {
            for j in 0..g {
                worst = worst.max((estimate.eval2(x(i), x(j)) - truth.eval2(x(i), x(j))).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentConfig {
    /// Nodes for univariate components.
    pub n: usize,
    /// Nodes per axis for bivariate and marginal components.
    pub n1: usize,
    pub method: FitMethod,
    /// Oracle resamples per sample point.
    pub resamples: usize,
    /// Random points used to estimate the constant term.
    pub constant_samples: usize,
    pub seed: u64,
}

impl Default for ComponentConfig {
    fn default() -> Self {
        Self { n: 32, n1: 32, method: FitMethod::QuasiInterpolant, resamples: 1, constant_samples: 256, seed: 0 }
    }
}

/// All estimated components plus the constant term.
#[derive(Clone, Debug)]
pub struct ComponentSet<T> {
    pub d: usize,
    pub constant: T,
    pub components: Vec<ComponentEstimate<T>>,
    pub queries: u64,
}

impl<T: Real> ComponentSet<T> {
    pub fn evaluate(&self, x: &[T]) -> T {
        self.components.iter().fold(self.constant, |acc, c| acc + c.eval_point(x))
    }

    pub fn get(&self, target: ComponentTarget) -> Option<&ComponentEstimate<T>> {
        self.components.iter().find(|c| c.target == target)
    }

    /// One row per component: knots and coefficients as `;`-separated lists.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "target,centering,n_samples,knots,coefficients")?;
        writeln!(w, "constant,,0,,{}", self.constant)?;
        for c in &self.components {
            let join = |v: Vec<T>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            writeln!(w, "{},{:?},{},{},{}", c.target, c.centering, c.n_samples, join(c.knots()), join(c.coefficients()))?;
        }
        Ok(())
    }

    /// Dense evaluations for plotting: `target,x,y,value` (`y` empty for curves).
    pub fn write_dense_csv<W: Write>(&self, mut w: W, grid_n: usize) -> Result<()> {
        writeln!(w, "target,x,y,value")?;
        let g = grid_n.max(2);
        let x = |i: usize| T::lit(-1.0 + 2.0 * i as f64 / (g - 1) as f64);
        for c in &self.components {
            if c.arity() == 1 {
                for i in 0..g {
                    writeln!(w, "{},{},,{}", c.target, x(i), c.eval1(x(i)))?;
                }
            } else {
                for i in 0..g {
                    for j in 0..g {
                        writeln!(w, "{},{},{},{}", c.target, x(i), x(j), c.eval2(x(i), x(j)))?;
                    }
                }
            }
        }
        Ok(())
    }
}

const STREAM_CONSTANT: u64 = 9;
const COMPONENT_KEY: u64 = 0x636f_6d70;

/// Targets implied by the supports: one per univariate variable, one per
/// pair, and one marginal per variable with more than one partner.
pub fn targets_for(s1: &BTreeSet<usize>, s2: &BTreeSet<(usize, usize)>) -> Vec<(ComponentTarget, CenteringCase)> {
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for &(l, m) in s2 {
        *degree.entry(l).or_default() += 1;
        *degree.entry(m).or_default() += 1;
    }
    let mut out: Vec<(ComponentTarget, CenteringCase)> =
        s1.iter().map(|&p| (ComponentTarget::Univariate(p), CenteringCase::Univariate)).collect();
    for &(l, m) in s2 {
        out.push((ComponentTarget::Bivariate(l, m), CenteringCase::for_degrees(degree[&l], degree[&m])));
    }
    for (&l, &deg) in &degree {
        if deg > 1 {
            out.push((ComponentTarget::Marginal(l), CenteringCase::Marginal));
        }
    }
    out
}

/// Samples, fits and centres every component implied by `(s1, s2)`, then
/// estimates the constant as the mean residual `f − Σ φ̂` over random points.
pub fn estimate_components<T: Real>(
    oracle: &QueryOracle<T>,
    s1: &BTreeSet<usize>,
    s2: &BTreeSet<(usize, usize)>,
    config: &ComponentConfig,
) -> Result<ComponentSet<T>> {
    if config.resamples == 0 || config.constant_samples == 0 {
        return Err(Error::Config("resamples and constant samples must be at least 1".into()));
    }
    let d = oracle.d();
    let start = oracle.queries();
    let s2var: BTreeSet<usize> = s2.iter().flat_map(|&(a, b)| [a, b]).collect();
    if let Some(p) = s1.iter().find(|p| s2var.contains(p)) {
        return Err(Error::Config(format!("variable {p} is both univariate and interacting")));
    }
    let targets = targets_for(s1, s2);
    let components = targets
        .par_iter()
        .enumerate()
        .map(|(ti, &(target, case))| {
            let n = if matches!(target, ComponentTarget::Univariate(_)) { config.n } else { config.n1 };
            let pts = sample_component_grid::<T>(target, n, d, &s2var)?;
            let values = pts
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    oracle.query_keyed(x, config.resamples, rng::key(&[config.seed, COMPONENT_KEY, ti as u64, i as u64]))
                })
                .collect::<Result<Vec<T>>>()?;
            fit_component(target, &values, case, config.method).map_err(|e| e.context(target.to_string()))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut set = ComponentSet { d, constant: T::zero(), components, queries: 0 };
    let mut r = rng::stream(config.seed, STREAM_CONSTANT);
    let mut acc = T::zero();
    for i in 0..config.constant_samples {
        let x: Vec<T> = (0..d).map(|_| T::lit(r.gen_range(-1.0..=1.0))).collect();
        let y = oracle.query_keyed(&x, config.resamples, rng::key(&[config.seed, STREAM_CONSTANT, i as u64]))?;
        acc = acc + y - set.evaluate(&x);
    }
    set.constant = acc / T::from_usize_lossy(config.constant_samples);
    set.queries = oracle.queries() - start;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{make_benchmark, Benchmark, NoiseMode};
    use crate::quadrature::Rule;

    #[test]
    fn grid_layouts() {
        let none = BTreeSet::new();
        let u = sample_component_grid::<f64>(ComponentTarget::Univariate(0), 3, 5, &none).unwrap();
        assert_eq!(u, vec![vec![-1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0; 5], vec![1.0, 0.0, 0.0, 0.0, 0.0]]);
        let b = sample_component_grid::<f64>(ComponentTarget::Bivariate(2, 3), 2, 5, &none).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|x| x[2].abs() == 1.0 && x[3].abs() == 1.0 && x[0] == 0.0));
        let s2var: BTreeSet<usize> = [2, 3, 4].into_iter().collect();
        let m = sample_component_grid::<f64>(ComponentTarget::Marginal(3), 4, 6, &s2var).unwrap();
        assert_eq!(m[0], vec![0.0, 0.0, -1.0, -1.0, -1.0, 0.0]);
        assert_eq!(m[1][3], -1.0);
        assert!((m[1][2] + 1.0 / 3.0).abs() < 1e-15);
        assert!(sample_component_grid::<f64>(ComponentTarget::Marginal(0), 4, 6, &s2var).is_err());
    }

    #[test]
    fn f1_components_and_reconstruction() {
        let model = make_benchmark::<f64>(Benchmark::F1, 30, 0, 0).unwrap();
        let truth = model.center_components(64).unwrap();
        let oracle = QueryOracle::new(Arc::new(model), NoiseMode::None, 0);
        let s1: BTreeSet<usize> = [0, 1].into_iter().collect();
        let s2: BTreeSet<(usize, usize)> = [(2, 3), (3, 4)].into_iter().collect();
        let cfg = ComponentConfig { n: 16, n1: 16, ..Default::default() };
        let set = estimate_components(&oracle, &s1, &s2, &cfg).unwrap();
        let e = set.get(ComponentTarget::Univariate(0)).unwrap();
        assert!(sup_error(e, truth.univariate_component(0).unwrap(), 64).unwrap() < 1e-6);
        let b = set.get(ComponentTarget::Bivariate(2, 3)).unwrap();
        assert_eq!(b.centering, CenteringCase::First);
        assert!(sup_error(b, truth.bivariate_component((2, 3)).unwrap(), 64).unwrap() < 1e-4);
        let m = set.get(ComponentTarget::Marginal(3)).unwrap();
        assert!(sup_error(m, truth.marginal_component(3).unwrap(), 64).unwrap() < 1e-4);

        let rule = Rule::<f64>::per_axis(64);
        for c in &set.components {
            let e = match c.arity() {
                1 => rule.expect(|x| c.eval1(x)),
                _ => rule.expect2(|x, y| c.eval2(x, y)),
            };
            assert!(e.abs() < 1e-6, "{} {e}", c.target);
        }
        let mut r = rng::stream(1, 1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..30).map(|_| r.gen_range(-1.0..=1.0)).collect();
            assert!((set.evaluate(&x) - oracle.model().evaluate(&x).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let n = 9;
        let t = Basis::<f64>::new(n).unwrap().nodes();
        let vals = Matrix::from_fn(n, n, |i, j| (t[i] + 0.3).exp() * (1.0 + t[j]).sin());
        for case in [CenteringCase::Joint, CenteringCase::First, CenteringCase::Second, CenteringCase::Both] {
            let mut once = Spline2::fit(&vals).unwrap();
            center_surface(&mut once, case);
            let mut twice = once.clone();
            center_surface(&mut twice, case);
            let diff = once.coeffs.as_slice().iter().zip(twice.coeffs.as_slice()).map(|(a, b)| (a - b).abs());
            assert!(diff.fold(0.0, f64::max) < 1e-12, "{case:?}");
            assert!(once.mean().abs() < 1e-12);
        }
    }
}
