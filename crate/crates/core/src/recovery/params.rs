//! Sample counts, step sizes and thresholds.
//!
//! Stage 2 (interactions) and stage 1 (univariates) each have a step-size
//! window that keeps the detection threshold below half the critical
//! derivative size (`D2/2`, `D1/2`). With noise level `ε` the window edges are
//! the positive roots of a depressed cubic, written in trigonometric form; at
//! `ε = 0` they reduce to the noiseless intervals. Steps are placed at 0.9 of
//! the way from the lower to the upper edge (`μ`, `μ'`) or at the centre
//! (`μ1`), after shrinking the upper edge so every probe stays inside the
//! enlarged box `[-(1+r), 1+r]^d`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemParams;
use crate::scalar::Real;

/// Constants of the compressive-sensing error bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConstants<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> Default for SolverConstants<T> {
    fn default() -> Self {
        Self { c1: T::one(), c2: T::one(), c3: T::one() }
    }
}

/// Fraction of the admissible window at which `μ` and `μ'` are placed.
pub const STEP_FRACTION: f64 = 0.9;

/// `ceil(c · s · ln(n / s))`, at least 1.
pub fn measurement_count(c_tilde: f64, s: usize, n: usize) -> usize {
    let v = c_tilde * s as f64 * (n as f64 / s as f64).ln();
    (v.ceil() as usize).max(1)
}

/// Stage-2 quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams<T> {
    pub m_v: usize,
    pub m_v_prime: usize,
    pub m_x: usize,
    pub a: T,
    pub b: T,
    pub a_prime: T,
    pub b_prime: T,
    pub eps: T,
    pub eps1: T,
    pub theta1: T,
    pub mu_window: (T, T),
    pub mu1_window: (T, T),
    pub mu: T,
    pub mu1: T,
    pub tau_prime: T,
    /// False when the noise level exceeded `ε1` and the noiseless rule was used instead.
    pub noise_certified: bool,
}

/// Stage-1 quantities, fixed once `|Ŝ2var|` is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariateParams<T> {
    pub budget: usize,
    pub candidates: usize,
    pub m_v_dprime: usize,
    pub m_x_prime: usize,
    pub a1: T,
    pub b1: T,
    pub eps_prime: T,
    pub eps2: T,
    pub theta2: T,
    pub mu_prime_window: (T, T),
    pub mu_prime: T,
    pub tau_dprime: T,
    pub noise_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams<T> {
    pub d: usize,
    pub k: usize,
    pub rho: usize,
    pub c_tilde: T,
    pub constants: SolverConstants<T>,
    pub r: T,
    pub interactions: InteractionParams<T>,
    pub univariates: Option<UnivariateParams<T>>,
    pub n1: usize,
    pub n2: usize,
}

impl<T: Real> RecoveryParams<T> {
    /// Closed-form query count for a run with `grid_points` distinct stage-2 points.
    pub fn expected_queries(&self, grid_points: usize) -> u64 {
        let s = &self.interactions;
        let stage2 = grid_points as u64 * 2 * s.m_v as u64 * (s.m_v_prime as u64 + 1) * self.n1 as u64;
        let stage1 = self
            .univariates
            .as_ref()
            .map_or(0, |u| (2 * u.m_x_prime as u64 + 1) * 2 * u.m_v_dprime as u64 * self.n2 as u64);
        stage2 + stage1
    }
}

fn check_inputs<T: Real>(problem: &ProblemParams<T>, d: usize, k: usize, rho: usize, c_tilde: T, r: T) -> Result<()> {
    problem.validate()?;
    if k == 0 || rho == 0 {
        return Err(Error::Config("k and rho_m must be positive".into()));
    }
    if d <= k || d <= rho {
        return Err(Error::Config(format!("need d > k and d > rho_m (d = {d}, k = {k}, rho_m = {rho})")));
    }
    if !(c_tilde > T::zero()) || !(r > T::zero()) {
        return Err(Error::Config("C~ and r must be positive".into()));
    }
    Ok(())
}

fn ceil_inv<T: Real>(lambda: T) -> usize {
    // guard against 1/λ landing a hair above an integer
    let v = (T::one() / lambda).as_f64();
    let n = (v - 1e-12).ceil().max(1.0);
    n as usize
}

/// Window of the positive roots of `c3·t³ − c1·t + c0 = 0` (`c3, c1 > 0`, `c0 ≥ 0`),
/// with `c0 = 0` giving `(0, √(c1/c3))`. Returns `(lo, hi, θ)`.
fn cubic_window(c3: f64, c1: f64, c0: f64) -> (f64, f64, f64) {
    let scale = 2.0 * (c1 / (3.0 * c3)).sqrt();
    let ceiling = 2.0 * c1 / 3.0 * (c1 / (3.0 * c3)).sqrt();
    let theta = (-(c0 / ceiling)).clamp(-1.0, 1.0).acos();
    let hi = scale * (theta / 3.0).cos();
    let lo = if c0 == 0.0 { 0.0 } else { scale * (theta / 3.0 - 2.0 * PI / 3.0).cos() };
    (lo.max(0.0), hi, theta)
}

/// Stage-2 parameters for noise level `eps` (`0` for noiseless queries).
pub fn derive_interactions<T: Real>(
    problem: &ProblemParams<T>,
    d: usize,
    k: usize,
    rho: usize,
    c_tilde: T,
    consts: &SolverConstants<T>,
    eps: T,
    r: T,
) -> Result<InteractionParams<T>> {
    check_inputs(problem, d, k, rho, c_tilde, r)?;
    let f = |x: T| x.as_f64();
    let (c1, c2) = (f(consts.c1), f(consts.c2));
    let (b3, d2, rr) = (f(problem.b3), f(problem.d2), f(r));
    let eps_f = f(eps);
    if eps_f < 0.0 {
        return Err(Error::Config("noise level must be non-negative".into()));
    }

    let m_v = measurement_count(f(c_tilde), k, d);
    let m_vp = measurement_count(f(c_tilde), rho, d);
    let (mv, mvp) = (m_v as f64, m_vp as f64);
    let m_x = ceil_inv(problem.lambda2);

    let rho_f = rho as f64;
    let a = (4.0 * rho_f + 1.0) * b3 / (2.0 * mvp.sqrt());
    let b = c1 * mvp.sqrt() * (4.0 * rho_f + 1.0) * k as f64 * b3 / (3.0 * mv);
    let ap = d2 / (4.0 * a * c2);
    let bp = 2.0 * c1 * (mv * mvp).sqrt();
    let eps1 = d2.powi(3) / (192.0 * 3f64.sqrt() * c1 * c2.powi(3) * (a.powi(3) * b * mvp * mv).sqrt());
    if eps_f >= eps1 {
        return Err(Error::NoiseTooLarge { stage: "interactions", eps: eps_f, ceiling: eps1 });
    }

    // a'² − (bμ² + b'ε/μ)/a > 0  ⇔  bμ³ − a a'² μ + b'ε < 0
    let (lo, hi, theta1) = cubic_window(b, a * ap * ap, bp * eps_f);
    let mu1 = ap;
    let room = rr - mu1 / mvp.sqrt();
    if room <= 0.0 {
        return Err(Error::Infeasible(format!(
            "mu1/sqrt(m'_v) = {:.4} leaves no room inside the enlargement r = {rr}",
            mu1 / mvp.sqrt()
        )));
    }
    let hi_dom = hi.min(room * mv.sqrt());
    if hi_dom <= lo {
        return Err(Error::Infeasible(format!("mu window ({lo:.3e}, {hi:.3e}) lies outside the enlarged domain")));
    }
    let mu = lo + STEP_FRACTION * (hi_dom - lo);
    let disc = ap * ap - (b * mu * mu + bp * eps_f / mu) / a;
    if disc <= 0.0 {
        return Err(Error::Infeasible(format!("mu1 window is empty at mu = {mu:.4e}")));
    }
    let tau = c2 * (a * mu1 + b * mu * mu / mu1 + bp * eps_f / (mu * mu1));
    if tau >= d2 / 2.0 {
        return Err(Error::Infeasible(format!("tau' = {tau:.4} is not below D2/2 = {}", d2 / 2.0)));
    }
    let t = T::lit;
    Ok(InteractionParams {
        m_v,
        m_v_prime: m_vp,
        m_x,
        a: t(a),
        b: t(b),
        a_prime: t(ap),
        b_prime: t(bp),
        eps,
        eps1: t(eps1),
        theta1: t(theta1),
        mu_window: (t(lo), t(hi)),
        mu1_window: (t(ap - disc.sqrt()), t(ap + disc.sqrt())),
        mu: t(mu),
        mu1: t(mu1),
        tau_prime: t(tau),
        noise_certified: true,
    })
}

/// Stage-1 parameters given `|Ŝ2var|`; `None` when no univariate budget remains.
#[allow(clippy::too_many_arguments)]
pub fn derive_univariates<T: Real>(
    problem: &ProblemParams<T>,
    d: usize,
    k: usize,
    s2var: usize,
    c_tilde: T,
    c3: T,
    eps: T,
    r: T,
) -> Result<Option<UnivariateParams<T>>> {
    if k <= s2var || d <= s2var {
        return Ok(None);
    }
    let f = |x: T| x.as_f64();
    let budget = k - s2var;
    let candidates = d - s2var;
    let (b3, d1, c3f, rr, eps_f) = (f(problem.b3), f(problem.d1), f(c3), f(r), f(eps));
    if eps_f < 0.0 {
        return Err(Error::Config("noise level must be non-negative".into()));
    }
    let m = if candidates > budget { measurement_count(f(c_tilde), budget, candidates) } else { budget };
    let mf = m as f64;
    let a1 = budget as f64 * b3 / (6.0 * mf);
    let b1 = mf.sqrt();
    let eps2 = d1.powf(1.5) / (3.0 * (6.0 * a1 * c3f.powi(3) * b1 * b1).sqrt());
    if eps_f >= eps2 {
        return Err(Error::NoiseTooLarge { stage: "univariates", eps: eps_f, ceiling: eps2 });
    }
    // C3(a1μ'² + b1ε/μ') < D1/2  ⇔  a1μ'³ − D1/(2C3) μ' + b1ε < 0
    let (lo, hi, theta2) = cubic_window(a1, d1 / (2.0 * c3f), b1 * eps_f);
    let hi_dom = hi.min(rr * mf.sqrt());
    if hi_dom <= lo {
        return Err(Error::Infeasible(format!("mu' window ({lo:.3e}, {hi:.3e}) lies outside the enlarged domain")));
    }
    let mu = lo + STEP_FRACTION * (hi_dom - lo);
    let tau = c3f * (a1 * mu * mu + b1 * eps_f / mu);
    if tau >= d1 / 2.0 {
        return Err(Error::Infeasible(format!("tau'' = {tau:.4} is not below D1/2 = {}", d1 / 2.0)));
    }
    let t = T::lit;
    Ok(Some(UnivariateParams {
        budget,
        candidates,
        m_v_dprime: m,
        m_x_prime: ceil_inv(problem.lambda1),
        a1: t(a1),
        b1: t(b1),
        eps_prime: eps,
        eps2: t(eps2),
        theta2: t(theta2),
        mu_prime_window: (t(lo), t(hi)),
        mu_prime: t(mu),
        tau_dprime: t(tau),
        noise_certified: true,
    }))
}

/// Noiseless parameters. Stage-1 values are filled in once `|Ŝ2var|` is known.
pub fn derive_params_noiseless<T: Real>(
    problem: &ProblemParams<T>,
    d: usize,
    k: usize,
    rho: usize,
    c_tilde: T,
    consts: &SolverConstants<T>,
    r: T,
) -> Result<RecoveryParams<T>> {
    derive_params_bounded(problem, d, k, rho, c_tilde, consts, T::zero(), r)
}

/// Parameters for bounded noise `|z| < ε`.
#[allow(clippy::too_many_arguments)]
pub fn derive_params_bounded<T: Real>(
    problem: &ProblemParams<T>,
    d: usize,
    k: usize,
    rho: usize,
    c_tilde: T,
    consts: &SolverConstants<T>,
    eps: T,
    r: T,
) -> Result<RecoveryParams<T>> {
    let interactions = derive_interactions(problem, d, k, rho, c_tilde, consts, eps, r)?;
    Ok(RecoveryParams { d, k, rho, c_tilde, constants: *consts, r, interactions, univariates: None, n1: 1, n2: 1 })
}

/// Smallest integers `N1`, `N2` strictly above the resampling bounds, at least 1:
///
/// `N1 > (σ²/ε²) ln(√2σ/(εp1) · m_v(m'_v+1)(2m_x+1)²|H|)`,
/// `N2 > (σ²/ε'²) ln(√2σ(2m'_x+1)m''_v/(ε'p2))`.
#[allow(clippy::too_many_arguments)]
pub fn derive_resampling(
    sigma: f64,
    eps: f64,
    eps_prime: f64,
    p1: f64,
    p2: f64,
    m_v: usize,
    m_v_prime: usize,
    m_v_dprime: usize,
    m_x: usize,
    m_x_prime: usize,
    hash_size: usize,
) -> (usize, usize) {
    let count1 = m_v as f64 * (m_v_prime as f64 + 1.0) * ((2 * m_x + 1) as f64).powi(2) * hash_size as f64;
    let count2 = (2 * m_x_prime + 1) as f64 * m_v_dprime as f64;
    (resampling_count(sigma, eps, p1, count1), resampling_count(sigma, eps_prime, p2, count2))
}

fn resampling_bound(sigma: f64, eps: f64, p: f64, count: f64) -> f64 {
    sigma * sigma / (eps * eps) * (2f64.sqrt() * sigma * count / (eps * p)).ln()
}

/// Smallest integer strictly above the resampling bound for `count` union-bound events, at least 1.
pub fn resampling_count(sigma: f64, eps: f64, p: f64, count: f64) -> usize {
    if sigma <= 0.0 {
        return 1;
    }
    let bound = resampling_bound(sigma, eps, p, count);
    if !(bound >= 1.0) {
        return 1;
    }
    bound.floor() as usize + 1
}

/// Smallest noise level `ε` certified by `n` resamples: the infimum of `ε`
/// with `n > (σ²/ε²) ln(√2σ·count/(εp))`.
pub fn certified_noise_level(sigma: f64, n: usize, p: f64, count: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let n = n as f64;
    let (mut lo, mut hi) = (sigma * 1e-12, sigma * 1e6);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if resampling_bound(sigma, mid, p, count) < n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
