//! Deterministic, resumable, parallel execution of an experiment.
//!
//! Replicas are processed in fixed chunks. Each chunk is written to its own
//! file under `parts/` once complete, so a rerun skips finished chunks and a
//! crash loses at most the chunks in flight. Seeds depend only on
//! `(master_seed, n, replica, stream tag)`, never on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use scenery_core::brownian::{bounding_box, sample_path, time_step, BrownianPath};
use scenery_core::functional::{conditional_cross, conditional_variance, evaluate_functional, Potential, ScalingMode};
use scenery_core::gaussian_field::sample_grid_field;
use scenery_core::oracles::{
    finite_n_variance, limit_probe_variance_d1, limit_variance_d1, local_time_quadratic, probe_variance,
    window_covariance, LIMIT_STEPS_PER_UNIT,
};
use scenery_core::poisson_field::sample_along_path;
use scenery_core::rng::{derive_seed, replica_seed, StreamTag};
use scenery_core::spectra::sigma_limit;
use scenery_core::stats::{FiniteDimProbe, TestReport};

use crate::config::{ExperimentConfig, RunPlan, Scenery};
use crate::error::{config_error, io_error, Result};
use crate::io::*;
use crate::report::write_reports;
use crate::suites::{run_suites, Artifacts};

/// Replicas per part file.
pub const CHUNK: usize = 50;
/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "SCENERY_THREADS";

/// Worker cap from `SCENERY_THREADS`, if set to a positive integer.
pub fn worker_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(config_error(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `job` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| config_error(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Time step of every path in the run.
pub fn path_step(plan: &RunPlan) -> Result<f64> {
    Ok(time_step(plan.correlation_length(), plan.config.kappa)?)
}

fn path_for(plan: &RunPlan, n: u64, replica: u64, horizon: f64) -> Result<BrownianPath> {
    let seed = replica_seed(plan.config.master_seed, n, replica, StreamTag::Path);
    Ok(sample_path(plan.dim(), horizon, path_step(plan)?, seed)?)
}

/// The scenery of one replica, sampled around its path where needed.
pub fn scenery_for(plan: &RunPlan, n: u64, replica: u64, path: &BrownianPath) -> Result<Box<dyn Potential + Send + Sync>> {
    let seed = replica_seed(plan.config.master_seed, n, replica, StreamTag::Scenery);
    Ok(match &plan.scenery {
        Scenery::GaussianGrid { model, spacing } => {
            Box::new(sample_grid_field(model, &bounding_box(path, *spacing), *spacing, seed)?)
        }
        Scenery::GaussianFeatures { sampler, features } => Box::new(sampler.sample(*features, seed)?),
        Scenery::Poisson { shape } => Box::new(sample_along_path(shape, path, seed)?),
    })
}

/// `X_n` of one replica on the time grid, under the configured normalisation.
pub fn simulate_replica(plan: &RunPlan, n: u64, replica: u64) -> Result<Vec<f64>> {
    let horizon = n as f64 * plan.times[plan.times.len() - 1];
    let path = path_for(plan, n, replica, horizon)?;
    let scenery = scenery_for(plan, n, replica, &path)?;
    let trajectory = evaluate_functional(scenery.as_ref(), &path, n as f64, &plan.times, plan.mode())?;
    Ok(trajectory.rescaled_values(plan.config.applied_scaling(n)?))
}

/// Conditional statistics of one replica given its path.
pub fn conditional_replica(plan: &RunPlan, n: u64, replica: u64) -> Result<ConditionalRow> {
    let cond = plan
        .config
        .conditional
        .as_ref()
        .ok_or_else(|| config_error("no conditional section"))?;
    let [first, second] = cond.windows;
    let horizon = n as f64 * first.1.max(second.1).max(if cond.variance { 1.0 } else { 0.0 });
    let path = path_for(plan, n, replica, horizon)?;
    let cross = conditional_cross(&path, &plan.model, n as f64, first, second, plan.mode())?;
    let variance = if cond.variance {
        Some(conditional_variance(&path, &plan.model, n as f64, 1.0, plan.mode())?)
    } else {
        None
    };
    Ok(ConditionalRow { n, replica, cross, variance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PartKind {
    Trajectory,
    Conditional,
}

#[derive(Debug, Clone, Copy)]
struct Part {
    kind: PartKind,
    n: u64,
    chunk: usize,
    replicas: usize,
}

impl Part {
    fn file(&self, dir: &Path) -> PathBuf {
        let prefix = match self.kind {
            PartKind::Trajectory => "traj",
            PartKind::Conditional => "cond",
        };
        dir.join(PARTS_DIR).join(format!("{prefix}_n{}_c{:05}.csv", self.n, self.chunk))
    }

    fn range(&self) -> std::ops::Range<u64> {
        let start = (self.chunk * CHUNK) as u64;
        start..(start + CHUNK as u64).min(self.replicas as u64)
    }

    fn compute(&self, plan: &RunPlan, dir: &Path) -> Result<()> {
        let path = self.file(dir);
        match self.kind {
            PartKind::Trajectory => {
                let mut rows = Vec::with_capacity(CHUNK * plan.times.len());
                for replica in self.range() {
                    let values = simulate_replica(plan, self.n, replica)?;
                    rows.extend(plan.times.iter().zip(values).map(|(&t, x)| TrajectoryRow { n: self.n, replica, t, x }));
                }
                write_csv(&path, &rows)
            }
            PartKind::Conditional => {
                let rows = self
                    .range()
                    .map(|replica| conditional_replica(plan, self.n, replica))
                    .collect::<Result<Vec<_>>>()?;
                write_csv(&path, &rows)
            }
        }
    }
}

fn parts(kind: PartKind, ladder: &[u64], replicas: usize) -> Vec<Part> {
    let chunks = replicas.div_ceil(CHUNK);
    ladder
        .iter()
        .flat_map(|&n| (0..chunks).map(move |chunk| Part { kind, n, chunk, replicas }))
        .collect()
}

/// What a simulation pass did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulationSummary {
    pub computed_parts: usize,
    pub skipped_parts: usize,
}

#[derive(Serialize)]
struct Metadata {
    version: &'static str,
    seed_scheme: &'static str,
    time_step: f64,
    correlation_length: f64,
    replicas_per_part: usize,
    limit_steps_per_unit: f64,
    r_zero: f64,
    r_hat_zero: f64,
    degenerate: bool,
}

/// The config with fields that do not affect artifacts cleared.
fn identity(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.output_dir = None;
    c.suites.clear();
    c
}

fn prepare_dir(config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join(PARTS_DIR)).map_err(io_error(dir))?;
    let stored = dir.join(CONFIG_FILE);
    if stored.exists() {
        let previous: ExperimentConfig = read_json(&stored)?;
        if identity(&previous) != identity(config) {
            return Err(config_error(format!(
                "{} holds artifacts of a different experiment",
                dir.display()
            )));
        }
    }
    write_json(&stored, config)
}

/// Samples every missing part, then merges parts and writes the oracle tables.
pub fn simulate(config: &ExperimentConfig, dir: &Path, workers: Option<usize>) -> Result<SimulationSummary> {
    let plan = config.plan()?;
    prepare_dir(config, dir)?;
    let mut all = parts(PartKind::Trajectory, &config.n_ladder, config.replicas);
    if let Some(cond) = &config.conditional {
        all.extend(parts(PartKind::Conditional, &cond.n_ladder, cond.replicas));
    }
    let (done, todo): (Vec<Part>, Vec<Part>) = all.iter().partition(|p| p.file(dir).exists());
    with_workers(workers, || -> Result<()> {
        todo.par_iter().try_for_each(|part| part.compute(&plan, dir))?;
        merge_parts(&all, dir)?;
        write_oracles(&plan, dir)?;
        if plan.has_mixture_limit() && config.limit_replicas > 0 {
            write_limit(&plan, dir)?;
        }
        write_dumps(&plan, dir)
    })??;
    write_json(
        &dir.join(METADATA_FILE),
        &Metadata {
            version: env!("CARGO_PKG_VERSION"),
            seed_scheme: "splitmix64 fold over (master_seed, n, replica, tag); tags path=1 scenery=2 bootstrap=3 oracle=4 limit=5",
            time_step: path_step(&plan)?,
            correlation_length: plan.correlation_length(),
            replicas_per_part: CHUNK,
            limit_steps_per_unit: LIMIT_STEPS_PER_UNIT,
            r_zero: plan.model.variance(),
            r_hat_zero: plan.model.r_hat_zero(),
            degenerate: plan.model.is_degenerate(),
        },
    )?;
    Ok(SimulationSummary { computed_parts: todo.len(), skipped_parts: done.len() })
}

fn merge_parts(all: &[Part], dir: &Path) -> Result<()> {
    let mut trajectories: Vec<TrajectoryRow> = Vec::new();
    let mut conditional: Vec<ConditionalRow> = Vec::new();
    for part in all {
        match part.kind {
            PartKind::Trajectory => trajectories.extend(read_csv::<TrajectoryRow>(&part.file(dir))?),
            PartKind::Conditional => conditional.extend(read_csv::<ConditionalRow>(&part.file(dir))?),
        }
    }
    write_csv(&dir.join(TRAJECTORIES_FILE), &trajectories)?;
    if all.iter().any(|p| p.kind == PartKind::Conditional) {
        write_csv(&dir.join(CONDITIONAL_FILE), &conditional)?;
    }
    Ok(())
}

fn mode_label(mode: ScalingMode) -> &'static str {
    match mode {
        ScalingMode::Nondegenerate => "nondegenerate",
        ScalingMode::Degenerate => "degenerate",
    }
}

/// Every oracle the suites consume.
pub fn oracle_rows(plan: &RunPlan) -> Result<Vec<OracleRow>> {
    enum Job {
        Variance(u64),
        Probe(u64),
        Cross(u64, [(f64, f64); 2]),
        Limit,
        LimitProbe,
    }
    let mut jobs: Vec<Job> = Vec::new();
    for &n in &plan.config.n_ladder {
        jobs.push(Job::Variance(n));
        jobs.push(Job::Probe(n));
    }
    if let Some(cond) = &plan.config.conditional {
        jobs.extend(cond.n_ladder.iter().map(|&n| Job::Cross(n, cond.windows)));
    }
    jobs.push(Job::Limit);
    if plan.has_mixture_limit() {
        jobs.push(Job::LimitProbe);
    }
    let model = &plan.model;
    let mode = plan.mode();
    let row = |quantity: &str, n: Option<u64>, value: f64, tol: f64| OracleRow {
        quantity: quantity.into(),
        n,
        d: plan.dim(),
        mode: mode_label(mode).into(),
        value,
        tol,
    };
    jobs.par_iter()
        .map(|job| -> Result<OracleRow> {
            Ok(match *job {
                Job::Variance(n) => {
                    let v = finite_n_variance(model, n as f64, 1.0, mode)?;
                    row("variance_t1", Some(n), v.value, v.tolerance)
                }
                Job::Probe(n) => {
                    let v = probe_variance(model, n as f64, &plan.probe, mode)?;
                    row("probe_variance", Some(n), v.value, v.tolerance)
                }
                Job::Cross(n, [first, second]) => {
                    let v = window_covariance(model, n as f64, first, second, mode)?;
                    row("cross_mean", Some(n), v.value, v.tolerance)
                }
                Job::Limit if plan.has_mixture_limit() => row("limit_variance", None, limit_variance_d1(model, 1.0)?, 0.0),
                Job::Limit => {
                    let sigma = sigma_limit(model, plan.dim(), mode)?;
                    row("limit_variance", None, sigma * sigma, 0.0)
                }
                Job::LimitProbe => row("limit_probe_variance", None, limit_probe_variance_d1(model, &plan.probe)?, 0.0),
            })
        })
        .collect()
}

fn write_oracles(plan: &RunPlan, dir: &Path) -> Result<()> {
    write_csv(&dir.join(ORACLES_FILE), &oracle_rows(plan)?)
}

/// Local-time quadratic forms for the configured probe and for `[0, 1]`,
/// both from the same path.
pub fn limit_rows(probe: &FiniteDimProbe, replicas: usize, master_seed: u64) -> Result<Vec<LimitRow>> {
    let unit = FiniteDimProbe::new(vec![1.0], vec![1.0])?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let seed = derive_seed(master_seed, &[StreamTag::Limit as u64, replica]);
            Ok(LimitRow {
                replica,
                probe: local_time_quadratic(probe, seed)?,
                unit: local_time_quadratic(&unit, seed)?,
            })
        })
        .collect()
}

fn write_limit(plan: &RunPlan, dir: &Path) -> Result<()> {
    let path = dir.join(LIMIT_FILE);
    if path.exists() && read_csv::<LimitRow>(&path)?.len() == plan.config.limit_replicas {
        return Ok(());
    }
    write_csv(&path, &limit_rows(&plan.probe, plan.config.limit_replicas, plan.config.master_seed)?)
}

fn write_dumps(plan: &RunPlan, dir: &Path) -> Result<()> {
    let count = plan.config.dumps.min(plan.config.replicas) as u64;
    if count == 0 {
        return Ok(());
    }
    let dumps = dir.join(DUMPS_DIR);
    fs::create_dir_all(&dumps).map_err(io_error(&dumps))?;
    let n = plan.largest_n();
    let horizon = n as f64 * plan.times[plan.times.len() - 1];
    (0..count).into_par_iter().try_for_each(|replica| {
        let path = path_for(plan, n, replica, horizon)?;
        write_path_csv(&dumps.join(format!("path_n{n}_r{replica}.csv")), &path)?;
        let seed = replica_seed(plan.config.master_seed, n, replica, StreamTag::Scenery);
        match &plan.scenery {
            Scenery::GaussianGrid { model, spacing } => {
                let field = sample_grid_field(model, &bounding_box(&path, *spacing), *spacing, seed)?;
                write_field_csv(&dumps.join(format!("field_n{n}_r{replica}.csv")), &field)
            }
            Scenery::GaussianFeatures { sampler, features } => {
                write_features_csv(&dumps.join(format!("features_n{n}_r{replica}.csv")), &sampler.sample(*features, seed)?)
            }
            Scenery::Poisson { shape } => {
                let field = sample_along_path(shape, &path, seed)?;
                write_points_csv(&dumps.join(format!("points_n{n}_r{replica}.csv")), &field)
            }
        }
    })
}

/// What `run_experiment` produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub simulation: SimulationSummary,
    pub reports: Vec<TestReport>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(TestReport::passed)
    }
}

/// Simulates, computes oracles, runs the configured suites and persists everything.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path, workers: Option<usize>) -> Result<RunOutcome> {
    let simulation = simulate(config, dir, workers)?;
    let artifacts = Artifacts::load(dir)?;
    let reports = with_workers(workers, || run_suites(&artifacts, &config.suites))??;
    write_reports(dir, &artifacts, &reports)?;
    Ok(RunOutcome { dir: dir.to_path_buf(), simulation, reports })
}

/// Output directory: the explicit one, else the config's, else `./out`.
pub fn output_dir(config: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
