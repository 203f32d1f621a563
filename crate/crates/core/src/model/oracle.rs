use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::GroundTruthModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// How a bounded perturbation is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundedKind {
    /// Uniform on `(−ε, ε)`, independent across samples.
    Uniform,
    /// A deterministic `±ε` (scaled just below ε) chosen per call.
    Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NoiseMode<T> {
    None,
    Bounded { eps: T, kind: BoundedKind },
    Gaussian { variance: T },
}

impl<T: Real> NoiseMode<T> {
    pub fn is_noiseless(&self) -> bool {
        matches!(self, NoiseMode::None)
    }
}

const KEYED: u64 = 0x6B_6579_6564;
const SEQUENTIAL: u64 = 0x7365_7175;

/// Black-box access to a model: `f(x) + z`, with an exact count of scalar evaluations.
///
/// Noise for a call is drawn from a random stream addressed by `(seed, key)`.
/// [`QueryOracle::query`] uses the running call index as the key;
/// [`QueryOracle::query_keyed`] lets concurrent callers supply a key that
/// identifies the probe, so results do not depend on thread scheduling.
#[derive(Debug)]
pub struct QueryOracle<T> {
    model: Arc<GroundTruthModel<T>>,
    noise: NoiseMode<T>,
    seed: u64,
    queries: AtomicU64,
    calls: AtomicU64,
}

impl<T: Real> QueryOracle<T> {
    pub fn new(model: Arc<GroundTruthModel<T>>, noise: NoiseMode<T>, seed: u64) -> Self {
        Self { model, noise, seed, queries: AtomicU64::new(0), calls: AtomicU64::new(0) }
    }

    pub fn model(&self) -> &GroundTruthModel<T> {
        &self.model
    }

    pub fn noise(&self) -> NoiseMode<T> {
        self.noise
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    /// Number of scalar evaluations issued so far.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// Mean of `resamples` noisy evaluations at `x`.
    pub fn query(&self, x: &[T], resamples: usize) -> Result<T> {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        self.query_with(x, resamples, rng::key(&[SEQUENTIAL, call]))
    }

    /// Like [`QueryOracle::query`], with the noise stream chosen by `key`.
    pub fn query_keyed(&self, x: &[T], resamples: usize, key: u64) -> Result<T> {
        self.query_with(x, resamples, rng::key(&[KEYED, key]))
    }

    fn query_with(&self, x: &[T], resamples: usize, stream: u64) -> Result<T> {
        if resamples == 0 {
            return Err(Error::Config("resamples must be at least 1".into()));
        }
        let fx = self.model.evaluate(x)?;
        self.queries.fetch_add(resamples as u64, Ordering::Relaxed);
        Ok(fx + T::lit(self.noise_mean(resamples, stream)))
    }

    fn noise_mean(&self, n: usize, stream: u64) -> f64 {
        match self.noise {
            NoiseMode::None => 0.0,
            NoiseMode::Bounded { eps, kind: BoundedKind::Sign } => {
                let s = if rng::mix64(self.seed ^ stream) & 1 == 0 { 1.0 } else { -1.0 };
                s * eps.as_f64() * (1.0 - 1e-6)
            }
            NoiseMode::Bounded { eps, kind: BoundedKind::Uniform } => {
                let mut r = rng::stream(self.seed, stream);
                let mut acc = 0.0;
                for _ in 0..n {
                    let u: f64 = loop {
                        let u: f64 = r.gen();
                        if u > 0.0 {
                            break u;
                        }
                    };
                    acc += 2.0 * u - 1.0;
                }
                eps.as_f64() * acc / n as f64
            }
            NoiseMode::Gaussian { variance } => {
                // The mean of n i.i.d. N(0, σ²) draws is exactly N(0, σ²/n).
                let mut r = rng::stream(self.seed, stream);
                let z: f64 = r.sample(StandardNormal);
                z * (variance.as_f64() / n as f64).sqrt()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_benchmark, Benchmark};

    fn f1(noise: NoiseMode<f64>) -> QueryOracle<f64> {
        QueryOracle::new(Arc::new(make_benchmark(Benchmark::F1, 10, 0, 0).unwrap()), noise, 3)
    }

    #[test]
    fn noiseless_counts_resamples() {
        let o = f1(NoiseMode::None);
        let mut x = vec![0.0; 10];
        x[..5].copy_from_slice(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(o.query(&x, 7).unwrap(), -2.0);
        assert_eq!(o.queries(), 7);
        assert!(o.query(&x, 0).is_err());
    }

    #[test]
    fn bounded_values_stay_within_eps() {
        for kind in [BoundedKind::Uniform, BoundedKind::Sign] {
            let o = f1(NoiseMode::Bounded { eps: 0.1, kind });
            let x = vec![0.3; 10];
            let fx = o.model().evaluate(&x).unwrap();
            for _ in 0..1000 {
                let v = o.query(&x, 1).unwrap();
                assert!((v - fx).abs() < 0.1);
            }
        }
    }

    #[test]
    fn keyed_noise_is_reproducible() {
        let o = f1(NoiseMode::Gaussian { variance: 1e-2 });
        let x = vec![0.0; 10];
        let a = o.query_keyed(&x, 3, 42).unwrap();
        let b = o.query_keyed(&x, 3, 42).unwrap();
        let c = o.query_keyed(&x, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(o.queries(), 9);
    }

    #[test]
    fn gaussian_resampling_concentrates() {
        // σ/√N = 1e-3, so 5e-3 is a five-sigma band
        let o = f1(NoiseMode::Gaussian { variance: 1e-2 });
        let x = vec![0.0; 10];
        let inside = (0..200).filter(|_| o.query(&x, 10_000).unwrap().abs() <= 5e-3).count();
        assert!(inside >= 198, "{inside}");
    }
}
