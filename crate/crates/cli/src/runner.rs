//! Trial execution, reports and sweeps.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use gspam::components::estimate_components;
use gspam::model::{make_benchmark, NoiseMode, QueryOracle};
use gspam::recovery::{recover_supports, RecoveryParams};
use gspam::rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart;
use crate::config::{Axis, NoiseSpec, RunConfig};

/// Outcome of one Monte Carlo trial. Wall time is kept out of the serialized
/// form so reports are reproducible byte for byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub s1: Vec<usize>,
    pub s2: Vec<(usize, usize)>,
    pub queries: u64,
    pub expected_queries: u64,
    pub grid_points: usize,
    pub hash_size: usize,
    pub params: Option<RecoveryParams<f64>>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub true_s1: Vec<usize>,
    pub true_s2: Vec<(usize, usize)>,
    pub trials: Vec<TrialRecord>,
    pub successes: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub mean_queries: f64,
}

impl RunReport {
    pub fn all_completed(&self) -> bool {
        self.errors == 0
    }
}

fn oracle_noise(spec: NoiseSpec) -> NoiseMode<f64> {
    match spec {
        NoiseSpec::None => NoiseMode::None,
        NoiseSpec::Bounded { eps, kind } => NoiseMode::Bounded { eps, kind },
        NoiseSpec::Gaussian { variance, .. } => NoiseMode::Gaussian { variance },
    }
}

pub fn run_trial(cfg: &RunConfig, trial: usize) -> Result<TrialRecord> {
    let seed = rng::trial_seed(cfg.seed, trial as u64);
    let model = Arc::new(make_benchmark::<f64>(cfg.benchmark, cfg.d, cfg.t, cfg.alpha_seed)?);
    let oracle = QueryOracle::new(model.clone(), oracle_noise(cfg.noise), rng::key(&[seed, 1]));
    let rc = cfg.recovery_config(seed)?;
    let start = Instant::now();
    let outcome = recover_supports(&oracle, &rc);
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut rec = TrialRecord {
        trial,
        seed,
        success: false,
        s1: Vec::new(),
        s2: Vec::new(),
        queries: oracle.queries(),
        expected_queries: 0,
        grid_points: 0,
        hash_size: 0,
        params: None,
        error: None,
        wall_seconds,
    };
    match outcome {
        Ok(est) => {
            rec.success = est.matches(&model.s1(), &model.s2());
            rec.s1 = est.s1.iter().copied().collect();
            rec.s2 = est.s2.iter().copied().collect();
            rec.queries = est.query_total;
            rec.expected_queries = est.expected_queries;
            rec.grid_points = est.grid_points;
            rec.hash_size = est.hash_size;
            rec.params = Some(est.params);
        }
        Err(e) => rec.error = Some(format!("{e:#}")),
    }
    Ok(rec)
}

/// Runs every trial of `cfg` (in parallel) and aggregates them in trial order.
pub fn run_recover(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = make_benchmark::<f64>(cfg.benchmark, cfg.d, cfg.t, cfg.alpha_seed)?;
    let trials = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<Vec<_>>>()?;
    let successes = trials.iter().filter(|t| t.success).count();
    let errors = trials.iter().filter(|t| t.error.is_some()).count();
    let done: Vec<&TrialRecord> = trials.iter().filter(|t| t.error.is_none()).collect();
    let mean_queries =
        if done.is_empty() { 0.0 } else { done.iter().map(|t| t.queries as f64).sum::<f64>() / done.len() as f64 };
    Ok(RunReport {
        config: cfg.clone(),
        true_s1: model.s1(),
        true_s2: model.s2(),
        successes,
        errors,
        success_rate: successes as f64 / trials.len() as f64,
        mean_queries,
        trials,
    })
}

const TRIAL_COLUMNS: [&str; 17] = [
    "trial",
    "seed",
    "success",
    "s1",
    "s2",
    "queries",
    "expected_queries",
    "grid_points",
    "hash_size",
    "n1",
    "n2",
    "mu",
    "mu1",
    "tau_prime",
    "mu_prime",
    "tau_dprime",
    "error",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn trial_row(t: &TrialRecord) -> Vec<String> {
    let p = t.params.as_ref();
    let u = p.and_then(|p| p.univariates.as_ref());
    vec![
        t.trial.to_string(),
        t.seed.to_string(),
        t.success.to_string(),
        t.s1.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        t.s2.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" "),
        t.queries.to_string(),
        t.expected_queries.to_string(),
        t.grid_points.to_string(),
        t.hash_size.to_string(),
        p.map(|p| p.n1.to_string()).unwrap_or_default(),
        p.map(|p| p.n2.to_string()).unwrap_or_default(),
        fmt_opt(p.map(|p| p.interactions.mu)),
        fmt_opt(p.map(|p| p.interactions.mu1)),
        fmt_opt(p.map(|p| p.interactions.tau_prime)),
        fmt_opt(u.map(|u| u.mu_prime)),
        fmt_opt(u.map(|u| u.tau_dprime)),
        t.error.clone().unwrap_or_default(),
    ]
}

fn write_timing(path: &Path, rows: &[(String, &TrialRecord)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cell", "trial", "wall_seconds"])?;
    for (cell, t) in rows {
        w.write_record([cell.as_str(), &t.trial.to_string(), &format!("{:.3}", t.wall_seconds)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json`, `trials.csv` and `timing.csv` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    let mut w = csv::Writer::from_path(dir.join("trials.csv"))?;
    w.write_record(TRIAL_COLUMNS)?;
    for t in &report.trials {
        w.write_record(trial_row(t))?;
    }
    w.flush()?;
    let rows: Vec<(String, &TrialRecord)> = report.trials.iter().map(|t| (String::from("run"), t)).collect();
    write_timing(&dir.join("timing.csv"), &rows)
}

/// Estimates the components of the first trial's model from its recovered
/// supports and writes `components.csv` and `components_dense.csv`.
pub fn write_components(report: &RunReport, dir: &Path) -> Result<()> {
    let cfg = &report.config;
    let (Some(first), Some(ccfg)) = (report.trials.first(), cfg.component_config(report.trials[0].seed)) else {
        return Ok(());
    };
    if first.error.is_some() {
        return Ok(());
    }
    let model = Arc::new(make_benchmark::<f64>(cfg.benchmark, cfg.d, cfg.t, cfg.alpha_seed)?);
    let resamples = match (cfg.noise, first.params.as_ref()) {
        (NoiseSpec::Gaussian { .. }, Some(p)) => p.n1,
        _ => 1,
    };
    let oracle = QueryOracle::new(model, oracle_noise(cfg.noise), rng::key(&[first.seed, 2]));
    let s1: BTreeSet<usize> = first.s1.iter().copied().collect();
    let s2: BTreeSet<(usize, usize)> = first.s2.iter().copied().collect();
    let set = estimate_components(&oracle, &s1, &s2, &gspam::components::ComponentConfig { resamples, ..ccfg })?;
    set.write_csv(File::create(dir.join("components.csv"))?)?;
    set.write_dense_csv(File::create(dir.join("components_dense.csv"))?, 101)?;
    Ok(())
}

/// One aggregated sweep cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub d: usize,
    pub k: usize,
    pub rho: usize,
    pub c_tilde: f64,
    pub trials: usize,
    pub successes: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub mean_queries: f64,
}

pub const SWEEP_COLUMNS: [&str; 11] =
    ["axis", "value", "d", "k", "rho", "c_tilde", "trials", "successes", "errors", "success_rate", "mean_queries"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<RunReport>,
}

impl SweepReport {
    pub fn all_completed(&self) -> bool {
        self.cells.iter().all(RunReport::all_completed)
    }
}

pub fn run_sweep(cfg: &RunConfig, axis: Axis) -> Result<SweepReport> {
    let cells = cfg.sweep_cells(axis)?;
    let reports =
        cells.par_iter().map(|(_, c)| run_recover(c)).collect::<Vec<Result<RunReport>>>().into_iter().collect::<Result<Vec<_>>>()?;
    let rows = cells
        .iter()
        .zip(&reports)
        .map(|((value, c), r)| {
            let (k, rho) = c.benchmark.sparsity(c.t);
            SweepRow {
                axis,
                value: *value,
                d: c.d,
                k,
                rho,
                c_tilde: c.c_tilde,
                trials: r.trials.len(),
                successes: r.successes,
                errors: r.errors,
                success_rate: r.success_rate,
                mean_queries: r.mean_queries,
            }
        })
        .collect();
    Ok(SweepReport { axis, rows, cells: reports })
}

/// Writes `sweep.json`, `sweep.csv`, `sweep.svg` and `timing.csv` into `dir`.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(report)? + "\n")?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.axis.to_string(),
            r.value.to_string(),
            r.d.to_string(),
            r.k.to_string(),
            r.rho.to_string(),
            r.c_tilde.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            r.errors.to_string(),
            r.success_rate.to_string(),
            r.mean_queries.to_string(),
        ])?;
    }
    w.flush()?;
    fs::write(dir.join("sweep.svg"), chart::sweep_svg(report))?;
    let rows: Vec<(String, &TrialRecord)> = report
        .rows
        .iter()
        .zip(&report.cells)
        .flat_map(|(r, c)| c.trials.iter().map(move |t| (format!("{}={}", r.axis, r.value), t)))
        .collect();
    write_timing(&dir.join("timing.csv"), &rows)
}
