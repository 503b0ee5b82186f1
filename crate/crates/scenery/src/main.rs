use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use scenery::config::ExperimentConfig;
use scenery::harness::{output_dir, run_experiment, simulate, worker_cap, with_workers};
use scenery::report::{sigma_table, write_reports};
use scenery::suites::{run_suites, Artifacts};
use scenery::SuiteName;

#[derive(Parser)]
#[command(name = "scenery", version, about = "Brownian motion in random scenery: simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the limit constants and the finite-n variance ladder.
    Sigma {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate trajectories and write oracle tables.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate if needed, then run the named suites.
    Test {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, num_args = 1.., value_enum)]
        suite: Vec<SuiteName>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the configured suites from the artifacts in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let base = path.parent().unwrap_or(Path::new("."));
    let config = ExperimentConfig::from_file(path)?.resolve_tables(base)?;
    config.plan()?;
    Ok(config)
}

fn verdict(passed: bool, failing: &[String]) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing: {}", failing.join(", "));
        ExitCode::FAILURE
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let workers = worker_cap()?;
    match cli.command {
        Command::Sigma { config } => {
            let plan = load(&config)?.plan()?;
            print!("{}", with_workers(workers, || sigma_table(&plan))??);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config, out } => {
            let config = load(&config)?;
            let dir = output_dir(&config, out.as_deref());
            let summary = simulate(&config, &dir, workers).with_context(|| format!("simulating into {}", dir.display()))?;
            println!(
                "{}: {} parts computed, {} reused",
                dir.display(),
                summary.computed_parts,
                summary.skipped_parts
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Test { config, suite, out } => {
            let mut config = load(&config)?;
            if suite.is_empty() {
                bail!("name at least one suite");
            }
            config.suites = suite;
            let dir = output_dir(&config, out.as_deref());
            let outcome = run_experiment(&config, &dir, workers)?;
            print!("{}", std::fs::read_to_string(dir.join(scenery::io::SUMMARY_FILE))?);
            let failing: Vec<String> = outcome.reports.iter().filter(|r| !r.passed()).map(|r| r.name.clone()).collect();
            Ok(verdict(outcome.all_passed(), &failing))
        }
        Command::Report { input } => {
            let artifacts = Artifacts::load(&input)?;
            let suites = artifacts.plan.config.suites.clone();
            let reports = with_workers(workers, || run_suites(&artifacts, &suites))??;
            write_reports(&input, &artifacts, &reports)?;
            print!("{}", std::fs::read_to_string(input.join(scenery::io::SUMMARY_FILE))?);
            let failing: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.clone()).collect();
            Ok(verdict(failing.is_empty(), &failing))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
