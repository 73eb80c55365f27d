//! Parameter sweeps over the cross product of a grid.
//!
//! Grid syntax: `param=value,value;param=value,...` over `n`, `k`, `f`,
//! `friend_prob` and `v`, e.g. `v=3,20;friend_prob=0,0.4`. Every cell runs
//! the base scenario's replications with the same seeds, so cells are paired.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use votesim_core::SimConfig;

use crate::batch::{run_replication, with_workers};
use crate::{Error, Result, Scenario};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    N(usize),
    K(u32),
    F(usize),
    FriendProb(f64),
    V(usize),
}

impl Setting {
    fn parse(param: &str, value: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("grid: invalid value `{value}` for `{param}`"));
        Ok(match param {
            "n" => Setting::N(value.parse().map_err(|_| bad())?),
            "k" => Setting::K(value.parse().map_err(|_| bad())?),
            "f" => Setting::F(value.parse().map_err(|_| bad())?),
            "v" => Setting::V(value.parse().map_err(|_| bad())?),
            "friend_prob" => Setting::FriendProb(value.parse().map_err(|_| bad())?),
            other => {
                return Err(Error::Validation(format!(
                    "grid: unknown parameter `{other}` (expected n, k, f, friend_prob or v)"
                )))
            }
        })
    }

    fn apply(self, config: &mut SimConfig) {
        match self {
            Setting::N(n) => config.n = n,
            Setting::K(k) => config.k = k,
            Setting::F(f) => config.f = f,
            Setting::FriendProb(p) => config.friend_prob = p,
            Setting::V(v) => config.v = v,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::N(x) => write!(f, "n={x}"),
            Setting::K(x) => write!(f, "k={x}"),
            Setting::F(x) => write!(f, "f={x}"),
            Setting::FriendProb(x) => write!(f, "friend_prob={x}"),
            Setting::V(x) => write!(f, "v={x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<Setting>>,
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (param, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("grid: expected `param=values`, found `{part}`")))?;
            let param = param.trim();
            let values = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| Setting::parse(param, v))
                .collect::<Result<Vec<_>>>()?;
            if values.is_empty() {
                return Err(Error::Validation(format!("grid: `{param}` has no values")));
            }
            axes.push(values);
        }
        if axes.is_empty() {
            return Err(Error::Validation("grid: empty grid".into()));
        }
        Ok(Grid { axes })
    }

    /// Cross product, first axis slowest.
    pub fn cells(&self) -> Vec<Vec<Setting>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            acc.into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&s| {
                        let mut cell = prefix.clone();
                        cell.push(s);
                        cell
                    })
                })
                .collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: u32,
    pub f: usize,
    pub friend_prob: f64,
    pub v: usize,
    pub replications: usize,
    pub mean_change_rate: f64,
    pub std_change_rate: f64,
    pub convergence_fraction: f64,
    pub mean_clustering_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub cell: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<Skipped>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every feasible cell; infeasible cells are listed in `skipped`.
pub fn run_sweep(base: &Scenario, grid: &Grid, workers: usize) -> Result<SweepOutcome> {
    let mut configs = Vec::new();
    let mut skipped = Vec::new();
    for cell in grid.cells() {
        let mut sim = base.sim.clone();
        cell.iter().for_each(|s| s.apply(&mut sim));
        let candidate = Scenario { sim, ..base.clone() };
        match candidate.validate() {
            Ok(()) => configs.push(candidate),
            Err(e) => skipped.push(Skipped {
                cell: cell.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
                reason: e.to_string(),
            }),
        }
    }

    let jobs: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..base.replications).map(move |r| (c, r))).collect();
    let results = with_workers(workers, || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let scenario = &configs[c];
                run_replication(scenario.replication(r), scenario.burn_in()).map(|(_, s)| s)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let rows = configs
        .iter()
        .zip(results.chunks(base.replications))
        .map(|(scenario, reps)| {
            let rates: Vec<f64> = reps.iter().map(|r| r.steady_change_rate).collect();
            let (mean_change_rate, std_change_rate) = mean_std(&rates);
            let count = reps.len() as f64;
            SweepRow {
                n: scenario.sim.n,
                k: scenario.sim.k,
                f: scenario.sim.f,
                friend_prob: scenario.sim.friend_prob,
                v: scenario.sim.v,
                replications: reps.len(),
                mean_change_rate,
                std_change_rate,
                convergence_fraction: reps.iter().filter(|r| r.convergence_tick.is_some()).count() as f64 / count,
                mean_clustering_gap: reps.iter().map(|r| r.mean_clustering_gap).sum::<f64>() / count,
            }
        })
        .collect();
    Ok(SweepOutcome { rows, skipped })
}

pub const SWEEP_HEADER: &str =
    "n,k,f,friend_prob,v,replications,mean_change_rate,std_change_rate,convergence_fraction,mean_clustering_gap";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            r.f,
            r.friend_prob,
            r.v,
            r.replications,
            r.mean_change_rate,
            r.std_change_rate,
            r.convergence_fraction,
            r.mean_clustering_gap
        )?;
    }
    out.flush()
}
