//! Unique ANOVA form: zero-mean univariates, bivariates centered according to
//! the degrees of their two variables, and marginals for variables that
//! interact with more than one partner.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BivariateFn, ComponentFunction, Evaluator, GroundTruthModel};
use crate::error::{Error, Result};
use crate::quadrature::Rule;
use crate::scalar::Real;

pub const DEFAULT_CENTERING_NODES: usize = 64;

/// Which expectations are removed from a component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenteringCase {
    /// `φ − E_p φ`.
    Univariate,
    /// `E_x φ̃ − E_(l,x) φ̃` for a variable of degree > 1.
    Marginal,
    /// Both degrees 1: `φ − E_(l,l') φ`.
    Joint,
    /// `deg(l) = 1`, `deg(l') > 1`: `φ − E_l φ`.
    First,
    /// `deg(l) > 1`, `deg(l') = 1`: `φ − E_l' φ`.
    Second,
    /// Both degrees > 1: `φ − E_l φ − E_l' φ + E_(l,l') φ`.
    Both,
}

impl CenteringCase {
    pub fn for_degrees(deg_l: usize, deg_m: usize) -> Self {
        match (deg_l > 1, deg_m > 1) {
            (false, false) => Self::Joint,
            (false, true) => Self::First,
            (true, false) => Self::Second,
            (true, true) => Self::Both,
        }
    }
}

impl<T: Real> Rule<T> {
    /// Rule with `n` nodes: composite 4-point panels when `n` is a multiple of 4.
    pub fn per_axis(n: usize) -> Self {
        if n.is_multiple_of(4) {
            Self::composite(n / 4, 4)
        } else {
            Self::composite(1, n)
        }
    }
}

impl<T: Real> GroundTruthModel<T> {
    /// Equivalent model in unique ANOVA form; expectations use an `n`-node rule per axis.
    /// The returned model's constant is `E[f]`.
    pub fn center_components(&self, quadrature_n: usize) -> Result<Self> {
        if quadrature_n < 8 {
            return Err(Error::Config(format!("quadrature needs at least 8 nodes, got {quadrature_n}")));
        }
        if self.centered {
            return Ok(self.clone());
        }
        let rule = Arc::new(Rule::<T>::per_axis(quadrature_n));
        let mut constant = self.constant;

        let mut univariate = BTreeMap::new();
        for (&p, c) in &self.univariate {
            let Evaluator::Univariate(f) = c.evaluator.clone() else { unreachable!() };
            let mean = rule.expect(|t| f(t));
            constant = constant + mean;
            let g = ComponentFunction {
                evaluator: Evaluator::Univariate(Arc::new(move |t| f(t) - mean)),
                bounds: c.bounds,
            };
            univariate.insert(p, g);
        }

        let mut bivariate = BTreeMap::new();
        let mut parts: BTreeMap<usize, Vec<(BivariateFn<T>, bool, T)>> = BTreeMap::new();
        let mut marginal_b3: BTreeMap<usize, T> = BTreeMap::new();
        for (&(l, m), c) in &self.bivariate {
            let Evaluator::Bivariate(f) = c.evaluator.clone() else { unreachable!() };
            let mean = rule.expect2(|s, t| f(s, t));
            constant = constant + mean;
            let case = CenteringCase::for_degrees(self.degrees[l], self.degrees[m]);
            for (v, first) in [(l, true), (m, false)] {
                if self.degrees[v] > 1 {
                    parts.entry(v).or_default().push((f.clone(), first, mean));
                    let b = marginal_b3.entry(v).or_insert(T::zero());
                    *b = *b + c.bounds.b3;
                }
            }
            let r = rule.clone();
            let g: BivariateFn<T> = match case {
                CenteringCase::Joint => Arc::new(move |s, t| f(s, t) - mean),
                CenteringCase::First => Arc::new(move |s, t| f(s, t) - r.expect(|u| f(u, t))),
                CenteringCase::Second => Arc::new(move |s, t| f(s, t) - r.expect(|u| f(s, u))),
                _ => Arc::new(move |s, t| f(s, t) - r.expect(|u| f(u, t)) - r.expect(|u| f(s, u)) + mean),
            };
            bivariate.insert((l, m), ComponentFunction { evaluator: Evaluator::Bivariate(g), bounds: c.bounds });
        }

        let mut marginals = BTreeMap::new();
        for (q, list) in parts {
            let r = rule.clone();
            let b3 = marginal_b3[&q];
            let g = move |t: T| {
                list.iter().fold(T::zero(), |acc, (f, first, mean)| {
                    let e = if *first { r.expect(|u| f(t, u)) } else { r.expect(|u| f(u, t)) };
                    acc + e - *mean
                })
            };
            marginals.insert(q, ComponentFunction::univariate(g, b3));
        }

        Ok(Self {
            d: self.d,
            r: self.r,
            constant,
            univariate,
            bivariate,
            marginals,
            degrees: self.degrees.clone(),
            centered: true,
        })
    }

    /// Case rule applied to the pair `(l, l')` in this model.
    pub fn centering_case(&self, pair: (usize, usize)) -> CenteringCase {
        CenteringCase::for_degrees(self.degrees[pair.0], self.degrees[pair.1])
    }
}
