use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RecoveryConfig, RecoveryParams};
use crate::error::{Error, Result};
use crate::hashing::{build_hash_family, diagonal_grid, interaction_grid, target_size, HashFamily};
use crate::model::QueryOracle;
use crate::rng;
use crate::scalar::Real;
use crate::sensing::{
    draw_ensemble, gradient_measurements, hessian_row_measurements, sparse_recover, sparse_recover_warm,
    BernoulliEnsemble, SolverOptions,
};

const STREAM_V: u64 = 1;
const STREAM_V_PRIME: u64 = 2;
const STREAM_V_DPRIME: u64 = 3;
const STREAM_HASH: u64 = 4;
const STAGE2: u64 = 2;
const STAGE1: u64 = 1;

/// The measurement ensembles `V` (`m_v × d`) and `V'` (`m'_v × d`).
#[derive(Clone, Debug)]
pub struct Ensembles<T> {
    pub v: BernoulliEnsemble<T>,
    pub v_prime: BernoulliEnsemble<T>,
}

impl<T: Real> Ensembles<T> {
    pub fn draw(params: &RecoveryParams<T>, seed: u64) -> Self {
        let s = &params.interactions;
        Self {
            v: draw_ensemble(s.m_v, params.d, &mut rng::stream(seed, STREAM_V)),
            v_prime: draw_ensemble(s.m_v_prime, params.d, &mut rng::stream(seed, STREAM_V_PRIME)),
        }
    }
}

/// Grid point and statistic that caused a detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness<T> {
    pub point_index: usize,
    /// Hash member whose grid first produced the point (stage 2 only).
    pub hash_member: Option<usize>,
    /// Row of the Hessian (stage 2) or coordinate (stage 1) that was thresholded.
    pub row: usize,
    pub statistic: T,
    pub point: Vec<T>,
}

/// Gradient and recovered Hessian rows at one point. Rows not listed are zero.
#[derive(Clone, Debug)]
pub struct PointHessian<T> {
    pub gradient: Vec<T>,
    pub rows: BTreeMap<usize, Vec<T>>,
}

fn support<T: Real>(x: &[T]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(i, _)| i).collect()
}

/// Gradient at `x` and every Hessian row reachable from the gradient supports.
pub fn hessian_rows_at<T: Real>(
    oracle: &QueryOracle<T>,
    x: &[T],
    ens: &Ensembles<T>,
    params: &RecoveryParams<T>,
    solver: &SolverOptions,
    key: u64,
) -> Result<PointHessian<T>> {
    let s = &params.interactions;
    let d = params.d;
    let grad = |base: &[T], tag: u64, hint: &[usize]| -> Result<Vec<T>> {
        let y = gradient_measurements(oracle, base, &ens.v, s.mu, None, params.n1, rng::key(&[key, tag]))?;
        sparse_recover_warm(&ens.v.matrix, &y.values, params.k, solver, hint)
    };
    let gradient = grad(x, 0, &[]).map_err(|e| e.context("gradient at the base point"))?;
    let hint = support(&gradient);
    let mut offsets = Vec::with_capacity(s.m_v_prime);
    let mut shifted = vec![T::zero(); d];
    for p in 0..s.m_v_prime {
        let dir = ens.v_prime.direction(p);
        for i in 0..d {
            shifted[i] = x[i] + s.mu1 * dir[i];
        }
        offsets.push(grad(&shifted, p as u64 + 1, &hint).map_err(|e| e.context(format!("gradient at offset {p}")))?);
    }
    let mut touched: BTreeSet<usize> = hint.into_iter().collect();
    for g in &offsets {
        touched.extend(support(g));
    }
    let mut rows = BTreeMap::new();
    for q in touched {
        let y = hessian_row_measurements(&gradient, &offsets, s.mu1, q)?;
        let z = sparse_recover(&ens.v_prime.matrix, &y.values, params.rho + 1, solver)
            .map_err(|e| e.context(format!("Hessian row {q}")))?;
        rows.insert(q, z);
    }
    Ok(PointHessian { gradient, rows })
}

/// Output of the interaction stage.
#[derive(Clone, Debug)]
pub struct InteractionStage<T> {
    pub s2: BTreeSet<(usize, usize)>,
    pub witnesses: BTreeMap<(usize, usize), Witness<T>>,
    pub grid_points: usize,
}

/// Detects interaction pairs on the union of the hash-member grids.
pub fn estimate_interactions<T: Real>(
    oracle: &QueryOracle<T>,
    family: &HashFamily,
    params: &RecoveryParams<T>,
    ens: &Ensembles<T>,
    solver: &SolverOptions,
    seed: u64,
) -> Result<InteractionStage<T>> {
    if family.d() != params.d || oracle.d() != params.d {
        return Err(Error::Dimension(format!(
            "family {} / oracle {} / params {}",
            family.d(),
            oracle.d(),
            params.d
        )));
    }
    let grid = interaction_grid::<T>(family, params.interactions.m_x)?;
    let tau = params.interactions.tau_prime;
    let results: Vec<Result<Vec<(usize, usize, T)>>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let key = rng::key(&[seed, STAGE2, i as u64]);
            let ph = hessian_rows_at(oracle, x, ens, params, solver, key).map_err(|e| {
                let (h, j) = grid.sources[i];
                e.context(format!("hash member {h}, grid point {j}"))
            })?;
            let mut hits = Vec::new();
            for (&q, z) in &ph.rows {
                for (qq, &v) in z.iter().enumerate().skip(q + 1) {
                    if v.abs() > tau {
                        hits.push((q, qq, v.abs()));
                    }
                }
            }
            Ok(hits)
        })
        .collect();
    let mut s2 = BTreeSet::new();
    let mut witnesses = BTreeMap::new();
    for (i, r) in results.into_iter().enumerate() {
        for (q, qq, stat) in r? {
            if s2.insert((q, qq)) {
                witnesses.insert(
                    (q, qq),
                    Witness {
                        point_index: i,
                        hash_member: Some(grid.sources[i].0),
                        row: q,
                        statistic: stat,
                        point: grid.points[i].clone(),
                    },
                );
            }
        }
    }
    Ok(InteractionStage { s2, witnesses, grid_points: grid.len() })
}

/// Detects univariate variables outside `s2var` along the diagonal grid.
/// Returns the detected set and its witnesses; empty when stage 1 is skipped.
pub fn estimate_univariates<T: Real>(
    oracle: &QueryOracle<T>,
    params: &RecoveryParams<T>,
    s2var: &BTreeSet<usize>,
    solver: &SolverOptions,
    seed: u64,
) -> Result<(BTreeSet<usize>, BTreeMap<usize, Witness<T>>)> {
    let Some(u) = &params.univariates else {
        return Ok((BTreeSet::new(), BTreeMap::new()));
    };
    let d = params.d;
    let p_set: Vec<usize> = (0..d).filter(|i| !s2var.contains(i)).collect();
    if p_set.len() != u.candidates {
        return Err(Error::Config(format!(
            "stage-1 parameters expect {} candidates, found {}",
            u.candidates,
            p_set.len()
        )));
    }
    let v = draw_ensemble::<T, _>(u.m_v_dprime, d, &mut rng::stream(seed, STREAM_V_DPRIME));
    let restricted = v.restrict(&p_set);
    let grid = diagonal_grid::<T>(u.m_x_prime, d)?;
    let results: Vec<Result<Vec<(usize, T)>>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let key = rng::key(&[seed, STAGE1, i as u64]);
            let y = gradient_measurements(oracle, x, &v, u.mu_prime, Some(&p_set), params.n2, key)
                .and_then(|y| sparse_recover(&restricted.matrix, &y.values, u.budget, solver))
                .map_err(|e| e.context(format!("diagonal point {i}")))?;
            Ok(y.iter()
                .enumerate()
                .filter(|(_, z)| z.abs() > u.tau_dprime)
                .map(|(j, z)| (p_set[j], z.abs()))
                .collect())
        })
        .collect();
    let mut s1 = BTreeSet::new();
    let mut witnesses = BTreeMap::new();
    for (i, r) in results.into_iter().enumerate() {
        for (q, stat) in r? {
            if s1.insert(q) {
                witnesses.insert(
                    q,
                    Witness { point_index: i, hash_member: None, row: q, statistic: stat, point: grid.points[i].clone() },
                );
            }
        }
    }
    Ok((s1, witnesses))
}

/// Estimated supports with the evidence and cost of obtaining them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportEstimate<T> {
    pub s1: BTreeSet<usize>,
    pub s2: BTreeSet<(usize, usize)>,
    pub s1_witnesses: BTreeMap<usize, Witness<T>>,
    #[serde(with = "pair_map")]
    pub s2_witnesses: BTreeMap<(usize, usize), Witness<T>>,
    pub query_total: u64,
    pub expected_queries: u64,
    pub grid_points: usize,
    pub hash_size: usize,
    pub params: RecoveryParams<T>,
}

impl<T: Real> SupportEstimate<T> {
    pub fn s2_vars(&self) -> BTreeSet<usize> {
        self.s2.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// Exact match of both supports.
    pub fn matches(&self, s1: &[usize], s2: &[(usize, usize)]) -> bool {
        self.s1.iter().copied().eq(s1.iter().copied().collect::<BTreeSet<_>>())
            && self.s2.iter().copied().eq(s2.iter().copied().collect::<BTreeSet<_>>())
    }
}

mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, V: Serialize>(m: &BTreeMap<(usize, usize), V>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(&(usize, usize), &V)> = m.iter().collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, V: Deserialize<'de>>(
        d: D,
    ) -> Result<BTreeMap<(usize, usize), V>, D::Error> {
        let v: Vec<((usize, usize), V)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// Runs both stages: interactions on the hash grids, then univariates on the
/// diagonal restricted to the variables not yet explained.
pub fn recover_supports<T: Real>(oracle: &QueryOracle<T>, config: &RecoveryConfig<T>) -> Result<SupportEstimate<T>> {
    config.validate()?;
    let d = oracle.d();
    let start = oracle.queries();
    let hash_size = target_size(d, config.hash_constant).max(1);
    let family = build_hash_family(d, hash_size, &mut rng::stream(config.seed, STREAM_HASH))?;
    let mut params = config.stage2_params(d, family.len())?;
    let ens = Ensembles::draw(&params, config.seed);
    let stage2 = estimate_interactions(oracle, &family, &params, &ens, &config.solver, config.seed)
        .map_err(|e| e.context("interaction stage"))?;
    let s2var: BTreeSet<usize> = stage2.s2.iter().flat_map(|&(a, b)| [a, b]).collect();
    config.stage1_params(&mut params, s2var.len())?;
    let (s1, s1_witnesses) = estimate_univariates(oracle, &params, &s2var, &config.solver, config.seed)
        .map_err(|e| e.context("univariate stage"))?;
    Ok(SupportEstimate {
        s1,
        s2: stage2.s2,
        s1_witnesses,
        s2_witnesses: stage2.witnesses,
        query_total: oracle.queries() - start,
        expected_queries: params.expected_queries(stage2.grid_points),
        grid_points: stage2.grid_points,
        hash_size: family.len(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{make_benchmark, Benchmark, ComponentFunction, GroundTruthModel, NoiseMode};

    fn f1_oracle(d: usize, noise: NoiseMode<f64>, seed: u64) -> QueryOracle<f64> {
        let m = make_benchmark::<f64>(Benchmark::F1, d, 0, 0).unwrap();
        QueryOracle::new(Arc::new(m), noise, seed)
    }

    #[test]
    fn f1_noiseless_exact_with_closed_form_count() {
        let oracle = f1_oracle(100, NoiseMode::None, 0);
        let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6, 0.1, 11);
        let est = recover_supports(&oracle, &cfg).unwrap();
        assert!(est.matches(&[0, 1], &[(2, 3), (3, 4)]), "{:?} {:?}", est.s1, est.s2);
        assert_eq!(est.query_total, est.expected_queries);
        assert!(est.s1.is_disjoint(&est.s2_vars()));
    }

    #[test]
    fn pure_additive_model_has_no_pairs() {
        let uni = vec![
            (0, ComponentFunction::univariate(|x: f64| 2.0 * x, 6.0)),
            (1, ComponentFunction::univariate(|x: f64| -3.0 * x * x, 6.0)),
        ];
        let m = GroundTruthModel::new(60, uni, vec![], 0.1).unwrap();
        let oracle = QueryOracle::new(Arc::new(m), NoiseMode::None, 0);
        let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6, 0.1, 3);
        let est = recover_supports(&oracle, &cfg).unwrap();
        assert!(est.s2.is_empty());
        assert_eq!(est.s1, [0, 1].into_iter().collect());
    }

    #[test]
    fn pure_interaction_model_has_no_univariates() {
        let bi = vec![((4, 9), ComponentFunction::bivariate(|x: f64, y: f64| 4.0 * x * y, 6.0))];
        let m = GroundTruthModel::new(60, vec![], bi, 0.1).unwrap();
        let oracle = QueryOracle::new(Arc::new(m), NoiseMode::None, 0);
        let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6, 0.1, 3);
        let est = recover_supports(&oracle, &cfg).unwrap();
        assert_eq!(est.s2, [(4, 9)].into_iter().collect());
        assert!(est.s1.is_empty());
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6, 0.1, 5);
        let a = recover_supports(&f1_oracle(80, NoiseMode::None, 0), &cfg).unwrap();
        let b = recover_supports(&f1_oracle(80, NoiseMode::None, 0), &cfg).unwrap();
        assert_eq!((a.s1, a.s2, a.query_total), (b.s1, b.s2, b.query_total));
    }

    #[test]
    fn gaussian_noise_beyond_the_ceiling_uses_wide_steps() {
        use crate::recovery::{NoisePlan, Resampling};
        let oracle = f1_oracle(100, NoiseMode::Gaussian { variance: 1e-4 }, 1);
        let plan = NoisePlan::Gaussian { sigma: 0.01, resampling: Resampling::Fixed { n1: 50, n2: 20, p1: 0.01, p2: 0.01 } };
        let cfg = RecoveryConfig::new(Benchmark::F1.problem_params(0), 5.6, 0.1, 2).with_noise(plan);
        let est = recover_supports(&oracle, &cfg).unwrap();
        assert!(!est.params.interactions.noise_certified);
        assert_eq!((est.params.n1, est.params.n2), (50, 20));
        assert!(est.matches(&[0, 1], &[(2, 3), (3, 4)]));
        assert_eq!(est.query_total, est.expected_queries);
    }

    #[test]
    fn adversarial_bounded_noise_at_half_the_ceiling() {
        use crate::model::BoundedKind;
        use crate::recovery::{derive_univariates, NoisePlan};
        let pr = Benchmark::F1.problem_params(0);
        let base = RecoveryConfig::<f64>::new(pr, 5.6, 0.1, 4).stage2_params(100, 8).unwrap();
        let u = derive_univariates::<f64>(&pr, 100, 5, 3, 5.6, 1.0, 0.0, 0.1).unwrap().unwrap();
        let eps = 0.5 * base.interactions.eps1.min(u.eps2);
        let oracle = f1_oracle(100, NoiseMode::Bounded { eps, kind: BoundedKind::Sign }, 3);
        let cfg = RecoveryConfig::new(pr, 5.6, 0.1, 4).with_noise(NoisePlan::Bounded { eps });
        let est = recover_supports(&oracle, &cfg).unwrap();
        assert!(est.params.interactions.noise_certified);
        assert!(est.matches(&[0, 1], &[(2, 3), (3, 4)]));
    }
}
