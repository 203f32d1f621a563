//! JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use gspam::components::{ComponentConfig, FitMethod};
use gspam::model::{make_benchmark, Benchmark, BoundedKind, ProblemParams, DEFAULT_ALPHA_SEED};
use gspam::recovery::{NoisePlan, RecoveryConfig, Resampling, SolverConstants};
use gspam::sensing::SolverOptions;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRIALS: usize = 5;

/// Oracle noise and, for Gaussian noise, the resampling counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    Bounded {
        eps: f64,
        #[serde(default = "default_kind")]
        kind: BoundedKind,
    },
    /// Without `n1`/`n2` the counts are derived from half the noise ceilings.
    Gaussian {
        variance: f64,
        #[serde(default)]
        n1: Option<usize>,
        #[serde(default)]
        n2: Option<usize>,
    },
}

fn default_kind() -> BoundedKind {
    BoundedKind::Sign
}

impl NoiseSpec {
    /// Sort key on the noise axis: the variance, or `ε²/3` for bounded noise.
    pub fn level(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Bounded { eps, .. } => eps * eps / 3.0,
            NoiseSpec::Gaussian { variance, .. } => variance,
        }
    }
}

/// Optional replacements for the benchmark's problem constants and solver constants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub b3: Option<f64>,
    pub hash_constant: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub r: Option<f64>,
}

/// Values for each sweep axis; only the one named on the command line is used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub ctilde: Vec<f64>,
    #[serde(default)]
    pub d: Vec<usize>,
    /// Block counts `T` for f3 (sparsity `k = 5T`).
    #[serde(default)]
    pub k: Vec<usize>,
    /// Block counts `T` for f4 (maximum degree `max(T, 2)`).
    #[serde(default)]
    pub rho: Vec<usize>,
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Ctilde,
    D,
    K,
    Rho,
    Noise,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Ctilde => "ctilde",
            Axis::D => "d",
            Axis::K => "k",
            Axis::Rho => "rho",
            Axis::Noise => "noise",
        })
    }
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ctilde" => Axis::Ctilde,
            "d" => Axis::D,
            "k" => Axis::K,
            "rho" => Axis::Rho,
            "noise" => Axis::Noise,
            other => bail!("unknown axis `{other}` (expected ctilde, d, k, rho or noise)"),
        })
    }
}

/// Optional component estimation after support recovery (first trial only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    #[serde(default = "default_nodes")]
    pub n: usize,
    #[serde(default = "default_nodes")]
    pub n1: usize,
    /// Bandwidth constant for the local cubic smoother used under Gaussian noise.
    #[serde(default = "default_bandwidth")]
    pub bandwidth_constant: f64,
}

fn default_nodes() -> usize {
    32
}

fn default_bandwidth() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    pub d: usize,
    #[serde(default)]
    pub t: usize,
    #[serde(default = "default_alpha_seed")]
    pub alpha_seed: u64,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    pub c_tilde: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_p")]
    pub p1: f64,
    #[serde(default = "default_p")]
    pub p2: f64,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub components: Option<ComponentSpec>,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_alpha_seed() -> u64 {
    DEFAULT_ALPHA_SEED
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::None
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_p() -> f64 {
    0.01
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            anyhow::anyhow!("config parse error at line {}, column {}: {e}", e.line(), e.column())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks everything that can be checked before any query is issued.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("field `trials`: must be at least 1");
        }
        if !(self.c_tilde > 0.0) {
            bail!("field `c_tilde`: must be positive");
        }
        if !(self.p1 > 0.0 && self.p1 < 1.0 && self.p2 > 0.0 && self.p2 < 1.0) {
            bail!("fields `p1`/`p2`: must lie in (0, 1)");
        }
        match self.noise {
            NoiseSpec::Bounded { eps, .. } if !(eps >= 0.0) => bail!("field `noise.eps`: must be non-negative"),
            NoiseSpec::Gaussian { variance, n1, n2 } => {
                if !(variance >= 0.0) {
                    bail!("field `noise.variance`: must be non-negative");
                }
                if n1.is_some() != n2.is_some() {
                    bail!("fields `noise.n1`/`noise.n2`: give both or neither");
                }
                if n1 == Some(0) || n2 == Some(0) {
                    bail!("fields `noise.n1`/`noise.n2`: must be at least 1");
                }
            }
            _ => {}
        }
        if let Some(c) = &self.components {
            if c.n < 3 || c.n1 < 3 {
                bail!("fields `components.n`/`components.n1`: need at least 3 nodes");
            }
        }
        make_benchmark::<f64>(self.benchmark, self.d, self.t, self.alpha_seed)
            .map_err(|e| anyhow::anyhow!("fields `benchmark`/`d`/`t`: {e}"))?;
        self.recovery_config(0)?.validate().map_err(|e| anyhow::anyhow!("field `overrides`: {e}"))?;
        Ok(())
    }

    /// Axis values as `(label value, config for that cell)`, checked to be nonempty and ascending.
    pub fn sweep_cells(&self, axis: Axis) -> Result<Vec<(f64, RunConfig)>> {
        let mut cells = Vec::new();
        match axis {
            Axis::Ctilde => {
                for &c in &self.sweep.ctilde {
                    cells.push((c, RunConfig { c_tilde: c, ..self.clone() }));
                }
            }
            Axis::D => {
                for &d in &self.sweep.d {
                    cells.push((d as f64, RunConfig { d, ..self.clone() }));
                }
            }
            Axis::K => {
                for &t in &self.sweep.k {
                    let cfg = RunConfig { benchmark: Benchmark::F3, t, ..self.clone() };
                    cells.push((Benchmark::F3.sparsity(t).0 as f64, cfg));
                }
            }
            Axis::Rho => {
                for &t in &self.sweep.rho {
                    let cfg = RunConfig { benchmark: Benchmark::F4, t, ..self.clone() };
                    cells.push((Benchmark::F4.sparsity(t).1 as f64, cfg));
                }
            }
            Axis::Noise => {
                for &n in &self.sweep.noise {
                    cells.push((n.level(), RunConfig { noise: n, ..self.clone() }));
                }
            }
        }
        if cells.is_empty() {
            bail!("field `sweep.{axis}`: no values given");
        }
        if cells.windows(2).any(|w| w[1].0 < w[0].0) {
            bail!("field `sweep.{axis}`: values must be sorted ascending");
        }
        for (_, c) in &cells {
            c.validate().with_context(|| format!("sweep cell on axis {axis}"))?;
        }
        Ok(cells)
    }

    pub fn problem(&self) -> ProblemParams<f64> {
        let mut p = self.benchmark.problem_params::<f64>(self.t);
        let o = &self.overrides;
        p.lambda1 = o.lambda1.unwrap_or(p.lambda1);
        p.lambda2 = o.lambda2.unwrap_or(p.lambda2);
        p.d1 = o.d1.unwrap_or(p.d1);
        p.d2 = o.d2.unwrap_or(p.d2);
        p.b3 = o.b3.unwrap_or(p.b3);
        p
    }

    pub fn noise_plan(&self) -> NoisePlan<f64> {
        match self.noise {
            NoiseSpec::None => NoisePlan::Noiseless,
            NoiseSpec::Bounded { eps, .. } => NoisePlan::Bounded { eps },
            NoiseSpec::Gaussian { variance, n1, n2 } => {
                let resampling = match (n1, n2) {
                    (Some(n1), Some(n2)) => Resampling::Fixed { n1, n2, p1: self.p1, p2: self.p2 },
                    _ => Resampling::Derived { p1: self.p1, p2: self.p2 },
                };
                NoisePlan::Gaussian { sigma: variance.sqrt(), resampling }
            }
        }
    }

    pub fn recovery_config(&self, seed: u64) -> Result<RecoveryConfig<f64>> {
        let o = &self.overrides;
        let defaults = SolverConstants::<f64>::default();
        let mut rc = RecoveryConfig::new(self.problem(), self.c_tilde, o.r.unwrap_or(0.1), seed).with_noise(self.noise_plan());
        rc.constants = SolverConstants {
            c1: o.c1.unwrap_or(defaults.c1),
            c2: o.c2.unwrap_or(defaults.c2),
            c3: o.c3.unwrap_or(defaults.c3),
        };
        rc.hash_constant = o.hash_constant.unwrap_or(rc.hash_constant);
        rc.solver = self.solver;
        Ok(rc)
    }

    pub fn component_config(&self, seed: u64) -> Option<ComponentConfig> {
        self.components.map(|c| {
            let method = match self.noise {
                NoiseSpec::Gaussian { .. } => FitMethod::LocalPolynomial { bandwidth_constant: c.bandwidth_constant },
                _ => FitMethod::QuasiInterpolant,
            };
            ComponentConfig { n: c.n, n1: c.n1, method, seed, ..ComponentConfig::default() }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(r#"{"benchmark": "f1", "d": 100, "c_tilde": 5.6}"#).unwrap();
        assert_eq!(c.trials, 5);
        assert_eq!(c.noise, NoiseSpec::None);
        assert_eq!(c.alpha_seed, DEFAULT_ALPHA_SEED);
    }

    #[test]
    fn parse_errors_name_the_position() {
        let e = RunConfig::from_json("{\n  \"benchmark\": \"f1\",\n  \"d\": 100,\n  \"c_tilde\": 5.6,\n  \"bogus\": 1\n}")
            .unwrap_err();
        assert!(format!("{e}").contains("line 5"), "{e}");
    }

    #[test]
    fn invalid_block_count_is_rejected() {
        let e = RunConfig::from_json(r#"{"benchmark": "f3", "d": 500, "t": 0, "c_tilde": 5.6}"#).unwrap_err();
        assert!(format!("{e:#}").contains("`t`"), "{e:#}");
    }

    #[test]
    fn sweep_values_must_ascend() {
        let c = RunConfig::from_json(r#"{"benchmark": "f1", "d": 100, "c_tilde": 5.6, "sweep": {"d": [500, 100]}}"#)
            .unwrap();
        assert!(c.sweep_cells(Axis::D).is_err());
        assert!(c.sweep_cells(Axis::Ctilde).is_err());
    }
}
