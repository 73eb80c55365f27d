use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use votesim::batch::run_scenario;
use votesim::formats::load_dataset;
use votesim::report::{parse_variants, render_json, render_table, run_forecast};
use votesim::sweep::{run_sweep, write_sweep_csv, Grid};
use votesim::{Error, Result, Scenario};
use votesim_core::forecast::VariantSpec;

/// Decentralized voting simulator and forecast-aggregation harness.
#[derive(Parser)]
#[command(name = "votesim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replication of a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run a scenario over a parameter grid.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// e.g. `v=3,20;friend_prob=0,0.4`
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Evaluate forecast variants on a dataset.
    Forecast {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        actuals: PathBuf,
        /// Comma-separated variant names, or `all`.
        #[arg(long, default_value = "all")]
        variants: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the gossip duration of the decentralized variants.
        #[arg(long)]
        gossip_ticks: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, out, workers } => {
            let scenario = Scenario::load(&scenario)?;
            let summary = run_scenario(&scenario, workers, Some(&out))?;
            println!(
                "{}: {} replications, mean steady change rate {:.6}, converged {:.0}%",
                if summary.label.is_empty() { "scenario" } else { &summary.label },
                summary.replications.len(),
                summary.mean_steady_change_rate,
                100.0 * summary.convergence_fraction
            );
        }
        Command::Sweep { scenario, grid, out, workers } => {
            let scenario = Scenario::load(&scenario)?;
            let grid = Grid::parse(&grid)?;
            let outcome = run_sweep(&scenario, &grid, workers)?;
            for s in &outcome.skipped {
                eprintln!("skipped cell {}: {}", s.cell, s.reason);
            }
            ensure_dir(&out)?;
            let path = out.join("sweep_summary.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_sweep_csv(&outcome.rows, BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
            write_sweep_csv(&outcome.rows, std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Forecast { predictions, actuals, variants, seed, gossip_ticks, out } => {
            let variants = parse_variants(&variants)?;
            let data = load_dataset(&predictions, &actuals)?;
            let specs: Vec<VariantSpec> = variants
                .into_iter()
                .map(|v| match gossip_ticks {
                    Some(t) => VariantSpec::new(v).with_gossip_ticks(t),
                    None => VariantSpec::new(v),
                })
                .collect();
            let report = run_forecast(&data, &specs, seed)?;
            let table = render_table(&report);
            print!("{table}");
            if let Some(out) = out {
                ensure_dir(&out)?;
                write(out.join("report.txt"), &table)?;
                write(out.join("report.json"), &render_json(&report))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
