use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ComponentFunction, GroundTruthModel, ProblemParams};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// Seed used to draw the frozen `α` coefficients of `f3` and `f4`.
pub const DEFAULT_ALPHA_SEED: u64 = 2017;

/// Synthetic test functions.
///
/// - `f1 = 2x1 − 3x2² + 4x3x4 − 5x4x5`
/// - `f2 = 10 sin(πx1) + 5e^(−2x2) + 10 sin(πx3x4) + 5e^(−2x4x5)`
/// - `f3`: `T` disjoint copies of the `f1` pattern with random coefficients
/// - `f4`: a hub variable `x3` interacting with `T` partners plus a chain of five pairs
///
/// Formulas use 1-based indices; models are 0-indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    F1,
    F2,
    F3,
    F4,
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
            Self::F4 => "f4",
        };
        f.write_str(s)
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            other => Err(Error::Config(format!("unknown benchmark {other:?}"))),
        }
    }
}

impl Benchmark {
    /// Problem constants used in the experiments for this benchmark with block count `t`.
    pub fn problem_params<T: Real>(self, t: usize) -> ProblemParams<T> {
        let (k, rho) = self.sparsity(t);
        match self {
            Self::F2 => ProblemParams {
                d1: T::lit(8.0),
                d2: T::lit(4.0),
                lambda1: T::lit(0.3),
                lambda2: T::lit(0.3),
                b3: T::lit(35.0),
                k_upper: k,
                rho_upper: rho,
            },
            _ => ProblemParams {
                d1: T::lit(2.0),
                d2: T::lit(3.0),
                lambda1: T::lit(0.3),
                lambda2: T::lit(1.0),
                b3: T::lit(6.0),
                k_upper: k,
                rho_upper: rho,
            },
        }
    }

    /// `(k, ρ_m)` of the benchmark.
    pub fn sparsity(self, t: usize) -> (usize, usize) {
        match self {
            Self::F1 | Self::F2 => (5, 2),
            Self::F3 => (5 * t, 2),
            Self::F4 => (13, t.max(2)),
        }
    }

    /// Smallest dimension that hosts every index.
    pub fn min_dimension(self, t: usize) -> usize {
        match self {
            Self::F1 | Self::F2 => 5,
            Self::F3 => 5 * t,
            Self::F4 => 13.max(t + 3),
        }
    }

    pub fn uses_block_count(self) -> bool {
        matches!(self, Self::F3 | Self::F4)
    }
}

fn draw_alphas(seed: u64, tag: u64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, rng::key(&[0xA1FA, tag]));
    (0..n).map(|_| r.gen_range(2.0..5.0)).collect()
}

/// Builds a benchmark model with enlargement `r = 0.1`.
///
/// `t` is the block count of `f3` and the hub degree of `f4`; it is ignored
/// for `f1` and `f2`. Coefficients of `f3`/`f4` are drawn from `[2, 5]` with
/// `alpha_seed`.
pub fn make_benchmark<T: Real>(bench: Benchmark, d: usize, t: usize, alpha_seed: u64) -> Result<GroundTruthModel<T>> {
    if bench.uses_block_count() && t == 0 {
        return Err(Error::Config(format!("{bench} needs T >= 1")));
    }
    let need = bench.min_dimension(t);
    if d < need {
        return Err(Error::Config(format!("{bench} with T = {t} needs d >= {need}, got d = {d}")));
    }
    let r = T::lit(0.1);
    let c = T::lit;
    let b6 = c(6.0);
    let lin = |a: f64| ComponentFunction::univariate(move |x: T| T::lit(a) * x, b6);
    let quad = |a: f64| ComponentFunction::univariate(move |x: T| -T::lit(a) * x * x, b6);
    let bil = |a: f64| ComponentFunction::bivariate(move |x: T, y: T| T::lit(a) * x * y, b6);

    match bench {
        Benchmark::F1 => GroundTruthModel::new(
            d,
            vec![(0, lin(2.0)), (1, quad(3.0))],
            vec![((2, 3), bil(4.0)), ((3, 4), bil(-5.0))],
            r,
        ),
        Benchmark::F2 => {
            let b = c(35.0);
            let pi = T::PI();
            GroundTruthModel::new(
                d,
                vec![
                    (0, ComponentFunction::univariate(move |x: T| T::lit(10.0) * (pi * x).sin(), b)),
                    (1, ComponentFunction::univariate(move |x: T| T::lit(5.0) * (T::lit(-2.0) * x).exp(), b)),
                ],
                vec![
                    ((2, 3), ComponentFunction::bivariate(move |x: T, y: T| T::lit(10.0) * (pi * x * y).sin(), b)),
                    ((3, 4), ComponentFunction::bivariate(move |x: T, y: T| T::lit(5.0) * (T::lit(-2.0) * x * y).exp(), b)),
                ],
                r,
            )
        }
        Benchmark::F3 => {
            let a = draw_alphas(alpha_seed, 3, 4);
            let mut uni = Vec::new();
            let mut bi = Vec::new();
            for i in 0..t {
                let o = 5 * i;
                uni.push((o, lin(a[0])));
                uni.push((o + 1, quad(a[1])));
                bi.push(((o + 2, o + 3), bil(a[2])));
                bi.push(((o + 3, o + 4), bil(-a[3])));
            }
            GroundTruthModel::new(d, uni, bi, r)
        }
        Benchmark::F4 => {
            let a = draw_alphas(alpha_seed, 4, 2 + t + 5);
            let uni = vec![(0, lin(a[0])), (1, quad(a[1]))];
            let mut bi = Vec::new();
            for i in 1..=t {
                bi.push(((2, i + 2), bil(a[1 + i])));
            }
            for i in 1..=5 {
                bi.push(((1 + 2 * i, 2 + 2 * i), bil(a[1 + t + i])));
            }
            GroundTruthModel::new(d, uni, bi, r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_patterns() {
        let f1 = make_benchmark::<f64>(Benchmark::F1, 500, 0, 0).unwrap();
        assert_eq!(f1.s1(), vec![0, 1]);
        assert_eq!(f1.s2(), vec![(2, 3), (3, 4)]);
        assert_eq!((f1.k(), f1.rho_max()), (5, 2));

        let f3 = make_benchmark::<f64>(Benchmark::F3, 500, 2, DEFAULT_ALPHA_SEED).unwrap();
        assert_eq!((f3.k(), f3.rho_max()), (10, 2));
        assert_eq!(f3.s2(), vec![(2, 3), (3, 4), (7, 8), (8, 9)]);

        let f4 = make_benchmark::<f64>(Benchmark::F4, 500, 5, DEFAULT_ALPHA_SEED).unwrap();
        assert_eq!((f4.k(), f4.rho_max()), (13, 5));
        assert_eq!(f4.degree(2).unwrap(), 5);
        for t in 2..=10 {
            let m = make_benchmark::<f64>(Benchmark::F4, 500, t, DEFAULT_ALPHA_SEED).unwrap();
            assert_eq!((m.k(), m.rho_max()), Benchmark::F4.sparsity(t));
        }
    }

    #[test]
    fn alphas_are_frozen_and_in_range() {
        let a = draw_alphas(DEFAULT_ALPHA_SEED, 3, 4);
        assert_eq!(a, draw_alphas(DEFAULT_ALPHA_SEED, 3, 4));
        assert!(a.iter().all(|&x| (2.0..5.0).contains(&x)));
    }

    #[test]
    fn small_dimensions_are_rejected() {
        assert!(make_benchmark::<f64>(Benchmark::F3, 9, 2, 0).is_err());
        assert!(make_benchmark::<f64>(Benchmark::F4, 12, 2, 0).is_err());
        assert!(make_benchmark::<f64>(Benchmark::F3, 100, 0, 0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("F2".parse::<Benchmark>().unwrap(), Benchmark::F2);
        assert!("f9".parse::<Benchmark>().is_err());
    }
}
