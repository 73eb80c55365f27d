//! Multi-seed batch runner.
//!
//! Replications run on a rayon pool of the requested size. Results are
//! collected in replication order, so summaries do not depend on which
//! worker finishes first.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use votesim_core::metrics::{convergence_tick, histogram, mean_clustering_gap, steady_change_rate};
use votesim_core::{run, SimConfig, Trajectory};

use crate::formats::{write_metrics_csv, write_trajectory_csv};
use crate::{Error, Result, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub seed: u64,
    pub ticks: usize,
    pub absorbed_at: Option<usize>,
    pub steady_change_rate: f64,
    pub convergence_tick: Option<usize>,
    pub final_winning_count: usize,
    /// Clustering gap averaged over the recorded ticks after burn-in.
    pub mean_clustering_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub label: String,
    pub burn_in: usize,
    pub mean_steady_change_rate: f64,
    pub convergence_fraction: f64,
    pub replications: Vec<ReplicationSummary>,
}

/// Runs `f` on a pool with `workers` threads (0 means rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn summarize(traj: &Trajectory, burn_in: usize) -> Result<ReplicationSummary> {
    let last = traj.last();
    let final_winning_count = histogram(last, traj.config.k)?.into_iter().max().unwrap_or(0);
    Ok(ReplicationSummary {
        seed: traj.config.seed,
        ticks: traj.ticks(),
        absorbed_at: traj.absorbed_at,
        steady_change_rate: steady_change_rate(traj, burn_in)?,
        convergence_tick: convergence_tick(traj),
        final_winning_count,
        mean_clustering_gap: mean_clustering_gap(traj, &traj.graph, burn_in, traj.ticks())?,
    })
}

pub fn run_replication(config: SimConfig, burn_in: usize) -> Result<(Trajectory, ReplicationSummary)> {
    let traj = run(config)?;
    let summary = summarize(&traj, burn_in)?;
    Ok((traj, summary))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn trajectory_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("trajectory_seed{seed}.csv"))
}

pub fn metrics_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("metrics_seed{seed}.csv"))
}

/// Runs every replication of `scenario`. With `out` set, writes the
/// requested per-replication CSVs and `summary.json` there.
pub fn run_scenario(scenario: &Scenario, workers: usize, out: Option<&Path>) -> Result<ScenarioSummary> {
    scenario.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let burn_in = scenario.burn_in();
    let replications: Vec<ReplicationSummary> = with_workers(workers, || {
        (0..scenario.replications)
            .into_par_iter()
            .map(|i| {
                let (traj, summary) = run_replication(scenario.replication(i), burn_in)?;
                if let Some(dir) = out {
                    let seed = traj.config.seed;
                    if scenario.outputs.trajectory_csv {
                        let path = trajectory_path(dir, seed);
                        write_trajectory_csv(&traj, create(&path)?).map_err(|e| Error::io(&path, e))?;
                    }
                    if scenario.outputs.metrics_csv {
                        let path = metrics_path(dir, seed);
                        write_metrics_csv(&traj, create(&path)?).map_err(|e| Error::io(&path, e))?;
                    }
                }
                Ok(summary)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let count = replications.len() as f64;
    let summary = ScenarioSummary {
        label: scenario.label.clone(),
        burn_in,
        mean_steady_change_rate: replications.iter().map(|r| r.steady_change_rate).sum::<f64>() / count,
        convergence_fraction: replications.iter().filter(|r| r.convergence_tick.is_some()).count() as f64 / count,
        replications,
    };
    if let (Some(dir), true) = (out, scenario.outputs.summary_json) {
        let path = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_results() {
        let sim = SimConfig { max_ticks: 80, ..SimConfig::new(120, 1, 3).with_friends(5, 0.4).with_seed(3) };
        let scenario = Scenario::new("w", sim, 6);
        let one = run_scenario(&scenario, 1, None).unwrap();
        let four = run_scenario(&scenario, 4, None).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.replications.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn unanimous_absorption_is_summarized() {
        let sim = SimConfig { n: 1, v: 1, max_ticks: 10, ..SimConfig::default() };
        let (_, s) = run_replication(sim, 1).unwrap();
        assert_eq!(s.steady_change_rate, 0.0);
        assert_eq!(s.convergence_tick, Some(0));
        assert_eq!(s.final_winning_count, 1);
    }
}
