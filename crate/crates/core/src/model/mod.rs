//! Ground-truth sparse additive models with pairwise interactions, the
//! benchmark functions used in the experiments, and a query-counting oracle.

mod benchmarks;
mod centering;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use benchmarks::{make_benchmark, Benchmark, DEFAULT_ALPHA_SEED};
pub use centering::{CenteringCase, DEFAULT_CENTERING_NODES};
pub use oracle::{BoundedKind, NoiseMode, QueryOracle};

pub type UnivariateFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type BivariateFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Evaluator<T> {
    Univariate(UnivariateFn<T>),
    Bivariate(BivariateFn<T>),
}

/// Declared sup-norm bounds of the derivatives of orders 0 through 3.
/// Only `b3` enters the sampling formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessBounds<T> {
    pub b0: Option<T>,
    pub b1: Option<T>,
    pub b2: Option<T>,
    pub b3: T,
}

impl<T: Real> SmoothnessBounds<T> {
    pub fn third_order(b3: T) -> Self {
        Self { b0: None, b1: None, b2: None, b3 }
    }
}

#[derive(Clone)]
pub struct ComponentFunction<T> {
    pub evaluator: Evaluator<T>,
    pub bounds: SmoothnessBounds<T>,
}

impl<T> fmt::Debug for ComponentFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arity = match self.evaluator {
            Evaluator::Univariate(_) => "univariate",
            Evaluator::Bivariate(_) => "bivariate",
        };
        f.debug_struct("ComponentFunction").field("arity", &arity).finish_non_exhaustive()
    }
}

/// Largest finite-difference estimate of each derivative order on a probe grid.
#[derive(Clone, Copy, Debug)]
pub struct SmoothnessCheck {
    pub observed_b3: f64,
    pub declared_b3: f64,
}

impl SmoothnessCheck {
    /// True when the declared third-order bound holds within relative tolerance 1e-3.
    pub fn holds(&self) -> bool {
        self.observed_b3 <= self.declared_b3 * (1.0 + 1e-3)
    }
}

impl<T: Real> ComponentFunction<T> {
    pub fn univariate(f: impl Fn(T) -> T + Send + Sync + 'static, b3: T) -> Self {
        Self { evaluator: Evaluator::Univariate(Arc::new(f)), bounds: SmoothnessBounds::third_order(b3) }
    }

    pub fn bivariate(f: impl Fn(T, T) -> T + Send + Sync + 'static, b3: T) -> Self {
        Self { evaluator: Evaluator::Bivariate(Arc::new(f)), bounds: SmoothnessBounds::third_order(b3) }
    }

    pub fn arity(&self) -> usize {
        match self.evaluator {
            Evaluator::Univariate(_) => 1,
            Evaluator::Bivariate(_) => 2,
        }
    }

    /// Evaluates a univariate component. Panics on a bivariate one.
    pub fn eval1(&self, t: T) -> T {
        match &self.evaluator {
            Evaluator::Univariate(f) => f(t),
            Evaluator::Bivariate(_) => panic!("eval1 on a bivariate component"),
        }
    }

    /// Evaluates a bivariate component. Panics on a univariate one.
    pub fn eval2(&self, s: T, t: T) -> T {
        match &self.evaluator {
            Evaluator::Bivariate(f) => f(s, t),
            Evaluator::Univariate(_) => panic!("eval2 on a univariate component"),
        }
    }

    /// Estimates the largest third-order partial derivative on `[-(1+r), 1+r]^arity`
    /// with fourth-order-accurate finite differences on a `probes`-point grid per axis.
    pub fn check_smoothness(&self, r: f64, probes: usize) -> SmoothnessCheck {
        let h = 1e-2;
        let lim = 1.0 + r - 2.0 * h;
        let grid: Vec<f64> = (0..probes).map(|i| -lim + 2.0 * lim * i as f64 / (probes - 1) as f64).collect();
        let d3 = |g: &dyn Fn(f64) -> f64, x: f64| {
            (g(x + 2.0 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2.0 * h)) / (2.0 * h * h * h)
        };
        let mut worst: f64 = 0.0;
        match &self.evaluator {
            Evaluator::Univariate(f) => {
                let g = |x: f64| f(T::lit(x)).as_f64();
                for &x in &grid {
                    worst = worst.max(d3(&g, x).abs());
                }
            }
            Evaluator::Bivariate(f) => {
                let e = |s: f64, t: f64| f(T::lit(s), T::lit(t)).as_f64();
                // central stencils for ∂sss, ∂sst, ∂stt, ∂ttt
                let d1 = |g: &dyn Fn(f64) -> f64, x: f64| (g(x + h) - g(x - h)) / (2.0 * h);
                let d2 = |g: &dyn Fn(f64) -> f64, x: f64| (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
                for &s in &grid {
                    for &t in &grid {
                        let sss = d3(&|x| e(x, t), s);
                        let ttt = d3(&|y| e(s, y), t);
                        let sst = d1(&|y| d2(&|x| e(x, y), s), t);
                        let stt = d1(&|x| d2(&|y| e(x, y), t), s);
                        worst = worst.max(sss.abs()).max(ttt.abs()).max(sst.abs()).max(stt.abs());
                    }
                }
            }
        }
        SmoothnessCheck { observed_b3: worst, declared_b3: self.bounds.b3.as_f64() }
    }
}

/// Regularity constants of the model class (critical derivative sizes and
/// interval lengths, third-derivative bound, sparsity bounds).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams<T> {
    pub d1: T,
    pub d2: T,
    pub lambda1: T,
    pub lambda2: T,
    pub b3: T,
    pub k_upper: usize,
    pub rho_upper: usize,
}

impl<T: Real> ProblemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let two = T::lit(2.0);
        let pos = [("D1", self.d1), ("D2", self.d2), ("lambda1", self.lambda1), ("lambda2", self.lambda2), ("B3", self.b3)];
        for (name, v) in pos {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.lambda1 > two || self.lambda2 > two {
            return Err(Error::Config("lambda1 and lambda2 must not exceed 2".into()));
        }
        if self.k_upper == 0 || self.rho_upper == 0 {
            return Err(Error::Config("sparsity bounds must be positive".into()));
        }
        Ok(())
    }
}

/// A sparse additive model with pairwise interactions on `[-(1+r), 1+r]^d`.
///
/// Variables are 0-indexed. Raw models carry univariate and bivariate parts;
/// the centered (ANOVA) form additionally carries marginals for variables of
/// degree greater than one.
#[derive(Clone, Debug)]
pub struct GroundTruthModel<T> {
    d: usize,
    r: T,
    constant: T,
    univariate: BTreeMap<usize, ComponentFunction<T>>,
    bivariate: BTreeMap<(usize, usize), ComponentFunction<T>>,
    marginals: BTreeMap<usize, ComponentFunction<T>>,
    degrees: Vec<usize>,
    centered: bool,
}

impl<T: Real> GroundTruthModel<T> {
    pub fn new(
        d: usize,
        univariate: Vec<(usize, ComponentFunction<T>)>,
        bivariate: Vec<((usize, usize), ComponentFunction<T>)>,
        r: T,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if !(r > T::zero()) {
            return Err(Error::InvalidModel("enlargement r must be positive".into()));
        }
        let mut uni = BTreeMap::new();
        for (p, c) in univariate {
            if p >= d {
                return Err(Error::InvalidModel(format!("univariate index {p} >= d = {d}")));
            }
            if c.arity() != 1 {
                return Err(Error::InvalidModel(format!("component for {p} is not univariate")));
            }
            if uni.insert(p, c).is_some() {
                return Err(Error::InvalidModel(format!("duplicate univariate index {p}")));
            }
        }
        let mut bi = BTreeMap::new();
        let mut degrees = vec![0; d];
        for ((l, m), c) in bivariate {
            if l >= m {
                return Err(Error::InvalidModel(format!("pair ({l}, {m}) must satisfy l < l'")));
            }
            if m >= d {
                return Err(Error::InvalidModel(format!("pair index {m} >= d = {d}")));
            }
            if c.arity() != 2 {
                return Err(Error::InvalidModel(format!("component for ({l}, {m}) is not bivariate")));
            }
            if bi.insert((l, m), c).is_some() {
                return Err(Error::InvalidModel(format!("duplicate pair ({l}, {m})")));
            }
            degrees[l] += 1;
            degrees[m] += 1;
        }
        if let Some(p) = uni.keys().find(|&&p| degrees[p] > 0) {
            return Err(Error::InvalidModel(format!("variable {p} is both univariate and interacting")));
        }
        Ok(Self { d, r, constant: T::zero(), univariate: uni, bivariate: bi, marginals: BTreeMap::new(), degrees, centered: false })
    }

    pub fn with_constant(mut self, c: T) -> Self {
        self.constant = c;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    pub fn s1(&self) -> Vec<usize> {
        self.univariate.keys().copied().collect()
    }

    pub fn s2(&self) -> Vec<(usize, usize)> {
        self.bivariate.keys().copied().collect()
    }

    pub fn s2_vars(&self) -> Vec<usize> {
        (0..self.d).filter(|&i| self.degrees[i] > 0).collect()
    }

    /// `|S1| + |vars(S2)|`.
    pub fn k(&self) -> usize {
        self.univariate.len() + self.degrees.iter().filter(|&&g| g > 0).count()
    }

    /// Largest degree of a variable in the interaction graph.
    pub fn rho_max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn degree(&self, l: usize) -> Result<usize> {
        self.degrees.get(l).copied().ok_or(Error::IndexOutOfRange { index: l, size: self.d })
    }

    pub fn univariate(&self) -> impl Iterator<Item = (usize, &ComponentFunction<T>)> {
        self.univariate.iter().map(|(&p, c)| (p, c))
    }

    pub fn bivariate(&self) -> impl Iterator<Item = ((usize, usize), &ComponentFunction<T>)> {
        self.bivariate.iter().map(|(&p, c)| (p, c))
    }

    pub fn marginals(&self) -> impl Iterator<Item = (usize, &ComponentFunction<T>)> {
        self.marginals.iter().map(|(&p, c)| (p, c))
    }

    pub fn univariate_component(&self, p: usize) -> Option<&ComponentFunction<T>> {
        self.univariate.get(&p)
    }

    pub fn bivariate_component(&self, pair: (usize, usize)) -> Option<&ComponentFunction<T>> {
        self.bivariate.get(&pair)
    }

    pub fn marginal_component(&self, q: usize) -> Option<&ComponentFunction<T>> {
        self.marginals.get(&q)
    }

    /// Checks that `x` lies in the enlarged box `[-(1+r), 1+r]^d`.
    pub fn check_domain(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension(format!("point has {} coordinates, model has d = {}", x.len(), self.d)));
        }
        let bound = T::one() + self.r;
        let slack = bound * T::epsilon() * T::lit(8.0);
        for (i, &v) in x.iter().enumerate() {
            if !(v.abs() <= bound + slack) {
                return Err(Error::OutOfDomain { coordinate: i, value: v.as_f64(), bound: bound.as_f64() });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        self.check_domain(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Sum of all components at `x` without the domain check.
    pub fn evaluate_unchecked(&self, x: &[T]) -> T {
        let mut acc = self.constant;
        for (&p, c) in &self.univariate {
            acc = acc + c.eval1(x[p]);
        }
        for (&q, c) in &self.marginals {
            acc = acc + c.eval1(x[q]);
        }
        for (&(l, m), c) in &self.bivariate {
            acc = acc + c.eval2(x[l], x[m]);
        }
        acc
    }

    /// True for models produced by [`GroundTruthModel::center_components`].
    pub fn is_centered(&self) -> bool {
        self.centered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GroundTruthModel<f64> {
        GroundTruthModel::new(
            4,
            vec![(0, ComponentFunction::univariate(|x| 2.0 * x, 0.0))],
            vec![((1, 2), ComponentFunction::bivariate(|a, b| a * b, 0.0))],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn rejects_overlapping_supports() {
        let r = GroundTruthModel::<f64>::new(
            3,
            vec![(1, ComponentFunction::univariate(|x| x, 0.0))],
            vec![((0, 1), ComponentFunction::bivariate(|a, b| a * b, 0.0))],
            0.1,
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn rejects_unordered_and_duplicate_pairs() {
        let bi = |p| (p, ComponentFunction::<f64>::bivariate(|a, b| a * b, 0.0));
        assert!(GroundTruthModel::new(3, vec![], vec![bi((1, 0))], 0.1).is_err());
        assert!(GroundTruthModel::new(3, vec![], vec![bi((0, 1)), bi((0, 1))], 0.1).is_err());
    }

    #[test]
    fn domain_errors_name_the_coordinate() {
        let m = tiny();
        match m.evaluate(&[0.0, 1.2, 0.0, 0.0]) {
            Err(Error::OutOfDomain { coordinate, .. }) => assert_eq!(coordinate, 1),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert_eq!(m.evaluate(&[1.1, -1.1, 0.5, 0.0]).unwrap(), 2.2 - 0.55);
    }

    #[test]
    fn degree_out_of_range() {
        assert!(matches!(tiny().degree(4), Err(Error::IndexOutOfRange { .. })));
        assert_eq!(tiny().degree(2).unwrap(), 1);
    }

    #[test]
    fn problem_params_validation() {
        let mut p = ProblemParams { d1: 2.0, d2: 3.0, lambda1: 0.3, lambda2: 1.0, b3: 6.0, k_upper: 5, rho_upper: 2 };
        assert!(p.validate().is_ok());
        p.lambda2 = 2.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn smoothness_check_recovers_third_derivative() {
        let c = ComponentFunction::<f64>::univariate(|x| x * x * x, 6.0);
        let chk = c.check_smoothness(0.1, 41);
        assert!((chk.observed_b3 - 6.0).abs() < 1e-3 && chk.holds());
        let s = ComponentFunction::<f64>::univariate(|x| 10.0 * (std::f64::consts::PI * x).sin(), 35.0);
        assert!(!s.check_smoothness(0.1, 41).holds());
    }
}
