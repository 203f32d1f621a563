//! Support recovery: parameter derivation and the two-stage query algorithm.

mod algorithm;
mod params;

pub use algorithm::{
    estimate_interactions, estimate_univariates, hessian_rows_at, recover_supports, Ensembles, InteractionStage,
    PointHessian, SupportEstimate, Witness,
};
pub use params::{
    certified_noise_level, derive_interactions, derive_params_bounded, derive_params_noiseless, derive_resampling,
    derive_univariates, measurement_count, resampling_count, InteractionParams, RecoveryParams, SolverConstants,
    UnivariateParams, STEP_FRACTION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemParams;
use crate::scalar::Real;
use crate::sensing::SolverOptions;

/// Resampling policy for Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum Resampling {
    /// Given `(N1, N2)`; the certified noise levels follow from the counts.
    Fixed { n1: usize, n2: usize, p1: f64, p2: f64 },
    /// Target half the admissible ceilings and derive `(N1, N2)`.
    Derived { p1: f64, p2: f64 },
}

/// What the algorithm assumes about the oracle's noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NoisePlan<T> {
    Noiseless,
    Bounded { eps: T },
    Gaussian { sigma: T, resampling: Resampling },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig<T> {
    pub problem: ProblemParams<T>,
    pub c_tilde: T,
    pub constants: SolverConstants<T>,
    pub hash_constant: f64,
    pub noise: NoisePlan<T>,
    pub solver: SolverOptions,
    pub r: T,
    pub seed: u64,
}

impl<T: Real> RecoveryConfig<T> {
    pub fn new(problem: ProblemParams<T>, c_tilde: T, r: T, seed: u64) -> Self {
        Self {
            problem,
            c_tilde,
            constants: SolverConstants::default(),
            hash_constant: 1.7,
            noise: NoisePlan::Noiseless,
            solver: SolverOptions::default(),
            r,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: NoisePlan<T>) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if !(self.hash_constant > 0.0) {
            return Err(Error::Config("hash constant must be positive".into()));
        }
        match self.noise {
            NoisePlan::Bounded { eps } if !(eps >= T::zero()) => {
                return Err(Error::Config("bounded noise level must be non-negative".into()))
            }
            NoisePlan::Gaussian { sigma, resampling } => {
                if !(sigma >= T::zero()) {
                    return Err(Error::Config("noise standard deviation must be non-negative".into()));
                }
                let (p1, p2) = match resampling {
                    Resampling::Fixed { n1, n2, p1, p2 } => {
                        if n1 == 0 || n2 == 0 {
                            return Err(Error::Config("resampling counts must be at least 1".into()));
                        }
                        (p1, p2)
                    }
                    Resampling::Derived { p1, p2 } => (p1, p2),
                };
                if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
                    return Err(Error::Config("failure probabilities must lie in (0, 1)".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Stage-2 parameters for dimension `d` and hash family size `hash_size`.
    pub fn stage2_params(&self, d: usize, hash_size: usize) -> Result<RecoveryParams<T>> {
        let pr = &self.problem;
        let (k, rho) = (pr.k_upper, pr.rho_upper);
        let base = derive_params_noiseless(pr, d, k, rho, self.c_tilde, &self.constants, self.r)?;
        match self.noise {
            NoisePlan::Noiseless => Ok(base),
            NoisePlan::Bounded { eps } => derive_params_bounded(pr, d, k, rho, self.c_tilde, &self.constants, eps, self.r),
            NoisePlan::Gaussian { sigma, resampling } => {
                let s = &base.interactions;
                let count = s.m_v as f64 * (s.m_v_prime as f64 + 1.0) * ((2 * s.m_x + 1) as f64).powi(2) * hash_size as f64;
                let sig = sigma.as_f64();
                let (eps, n1) = match resampling {
                    Resampling::Fixed { n1, p1, .. } => (certified_noise_level(sig, n1, p1, count), n1),
                    Resampling::Derived { p1, .. } => {
                        let eps = 0.5 * s.eps1.as_f64();
                        (eps, resampling_count(sig, eps, p1, count))
                    }
                };
                let mut p = match derive_params_bounded(pr, d, k, rho, self.c_tilde, &self.constants, T::lit(eps), self.r) {
                    Ok(p) => p,
                    Err(Error::NoiseTooLarge { .. }) => uncertified_steps(base.clone(), T::lit(eps), self.r),
                    Err(e) => return Err(e),
                };
                p.n1 = n1;
                Ok(p)
            }
        }
    }

    /// Fills in stage-1 parameters once `|Ŝ2var|` is known.
    pub fn stage1_params(&self, params: &mut RecoveryParams<T>, s2var: usize) -> Result<()> {
        let pr = &self.problem;
        let (d, k) = (params.d, params.k);
        let c3 = self.constants.c3;
        let base = derive_univariates(pr, d, k, s2var, self.c_tilde, c3, T::zero(), self.r)?;
        let Some(base) = base else {
            params.univariates = None;
            return Ok(());
        };
        let (u, n2) = match self.noise {
            NoisePlan::Noiseless => (base, 1),
            NoisePlan::Bounded { eps } => {
                (derive_univariates(pr, d, k, s2var, self.c_tilde, c3, eps, self.r)?.unwrap_or(base), 1)
            }
            NoisePlan::Gaussian { sigma, resampling } => {
                let count = (2 * base.m_x_prime + 1) as f64 * base.m_v_dprime as f64;
                let sig = sigma.as_f64();
                let (eps, n2) = match resampling {
                    Resampling::Fixed { n2, p2, .. } => (certified_noise_level(sig, n2, p2, count), n2),
                    Resampling::Derived { p2, .. } => {
                        let eps = 0.5 * base.eps2.as_f64();
                        (eps, resampling_count(sig, eps, p2, count))
                    }
                };
                match derive_univariates(pr, d, k, s2var, self.c_tilde, c3, T::lit(eps), self.r) {
                    Ok(u) => (u.unwrap_or(base), n2),
                    Err(Error::NoiseTooLarge { .. }) => {
                        let mut u = base;
                        u.eps_prime = T::lit(eps);
                        u.noise_certified = false;
                        (u, n2)
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        params.univariates = Some(u);
        params.n2 = n2;
        Ok(())
    }
}

/// Beyond the certified noise ceiling no step window exists. The noise in a
/// recovered Hessian entry then scales like `σ/(μμ1)`, so both steps take an
/// equal share of the enlargement `r` (at 0.9 of it), which maximizes `μμ1`
/// under `μ/√m_v + μ1/√m'_v ≤ r`. The noiseless threshold is kept.
fn uncertified_steps<T: Real>(mut p: RecoveryParams<T>, eps: T, r: T) -> RecoveryParams<T> {
    let s = &mut p.interactions;
    let half = T::lit(STEP_FRACTION * 0.5) * r;
    s.mu = half * T::from_usize_lossy(s.m_v).sqrt();
    s.mu1 = half * T::from_usize_lossy(s.m_v_prime).sqrt();
    s.eps = eps;
    s.noise_certified = false;
    p
}
