use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gspam_cli::{run_recover, run_sweep, runner, write_report, write_sweep, Axis, RunConfig};

#[derive(Parser)]
#[command(name = "gspam", version, about = "Support recovery experiments for sparse additive models with interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured benchmark for the configured number of trials.
    Recover {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one axis of the config and chart the aggregates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(cli: Option<PathBuf>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    cli.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Recover { config, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out_dir(out, &cfg, "out");
            let report = run_recover(&cfg)?;
            write_report(&report, &dir)?;
            runner::write_components(&report, &dir)?;
            for t in &report.trials {
                match &t.error {
                    Some(e) => eprintln!("trial {}: error: {e}", t.trial),
                    None => eprintln!(
                        "trial {}: {} queries={} ({:.1}s)",
                        t.trial,
                        if t.success { "exact" } else { "miss" },
                        t.queries,
                        t.wall_seconds
                    ),
                }
            }
            println!(
                "success rate {}/{} = {:.2}, mean queries {:.0}, report in {}",
                report.successes,
                report.trials.len(),
                report.success_rate,
                report.mean_queries,
                dir.display()
            );
            Ok(report.all_completed())
        }
        Command::Sweep { config, axis, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(out, &cfg, "sweep");
            let report = run_sweep(&cfg, axis)?;
            write_sweep(&report, &dir)?;
            for r in &report.rows {
                println!(
                    "{}={:<10} success {:.2} ({}/{}) mean queries {:.0}",
                    r.axis, r.value, r.success_rate, r.successes, r.trials, r.mean_queries
                );
            }
            println!("sweep written to {}", dir.display());
            Ok(report.all_completed())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some trials did not complete");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
