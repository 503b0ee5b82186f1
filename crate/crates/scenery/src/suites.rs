//! Named test suites over persisted artifacts. Everything here reads CSV
//! back from disk, so rerunning a suite on the same files reproduces its
//! verdicts exactly.

use std::collections::BTreeMap;
use std::path::Path;

use scenery_core::functional::scaling_factor;
use scenery_core::oracles::LimitLawD1;
use scenery_core::rng::{replica_seed, StreamTag};
use scenery_core::stats::{
    concentration_test, cross_term_test, ecf_test, kurtosis_test, moment_scaling_test, normality_test, variance_test,
    GridSample, KurtosisMode, Rung, TestReport,
};

use crate::config::{ExperimentConfig, RunPlan, SuiteName};
use crate::error::{HarnessError, Result};
use crate::io::*;

/// Everything a completed run left on disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub plan: RunPlan,
    /// `n -> replica -> X_n` on the time grid.
    pub trajectories: BTreeMap<u64, Vec<Vec<f64>>>,
    pub oracles: Vec<OracleRow>,
    pub limit: Option<Vec<LimitRow>>,
    pub conditional: Option<BTreeMap<u64, Vec<ConditionalRow>>>,
}

fn malformed(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Malformed { path: path.to_path_buf(), reason: reason.into() }
}

impl Artifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(HarnessError::MissingArtifact(dir.to_path_buf()));
        }
        let config: ExperimentConfig = read_json(&dir.join(CONFIG_FILE))?;
        let plan = config.plan()?;
        let traj_path = dir.join(TRAJECTORIES_FILE);
        let rows: Vec<TrajectoryRow> = read_csv(&traj_path)?;
        let grid = plan.times.len();
        let mut trajectories: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
        for chunk in rows.chunks(grid) {
            let first = chunk[0];
            let consistent = chunk.len() == grid
                && chunk
                    .iter()
                    .zip(&plan.times)
                    .all(|(r, t)| r.n == first.n && r.replica == first.replica && r.t == *t);
            if !consistent {
                return Err(malformed(&traj_path, format!("replica {} of n = {} does not cover the time grid", first.replica, first.n)));
            }
            let replicas = trajectories.entry(first.n).or_default();
            if replicas.len() as u64 != first.replica {
                return Err(malformed(&traj_path, format!("replicas of n = {} are not consecutive", first.n)));
            }
            replicas.push(chunk.iter().map(|r| r.x).collect());
        }
        for n in &config.n_ladder {
            if trajectories.get(n).map_or(0, Vec::len) != config.replicas {
                return Err(malformed(&traj_path, format!("expected {} replicas for n = {n}", config.replicas)));
            }
        }
        let oracles = read_csv(&dir.join(ORACLES_FILE))?;
        let limit_path = dir.join(LIMIT_FILE);
        let limit = if limit_path.exists() { Some(read_csv(&limit_path)?) } else { None };
        let cond_path = dir.join(CONDITIONAL_FILE);
        let conditional = if cond_path.exists() {
            let mut map: BTreeMap<u64, Vec<ConditionalRow>> = BTreeMap::new();
            for row in read_csv::<ConditionalRow>(&cond_path)? {
                map.entry(row.n).or_default().push(row);
            }
            Some(map)
        } else {
            None
        };
        Ok(Self { plan, trajectories, oracles, limit, conditional })
    }

    pub fn oracle(&self, quantity: &str, n: Option<u64>) -> Result<f64> {
        self.oracles
            .iter()
            .find(|r| r.quantity == quantity && r.n == n)
            .map(|r| r.value)
            .ok_or_else(|| HarnessError::MissingArtifact(format!("{ORACLES_FILE}: {quantity} at n = {n:?}").into()))
    }

    fn replicas(&self, n: u64) -> &[Vec<f64>] {
        self.trajectories.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `X_n(t)` at the last grid time (which is 1) across replicas.
    pub fn endpoint_samples(&self, n: u64) -> Vec<f64> {
        self.replicas(n).iter().map(|x| x[x.len() - 1]).collect()
    }

    pub fn probe_samples(&self, n: u64) -> Result<Vec<f64>> {
        self.replicas(n)
            .iter()
            .map(|x| Ok(self.plan.probe.evaluate(&self.plan.times, x)?))
            .collect()
    }

    fn limit_law(&self, column: fn(&LimitRow) -> f64) -> Result<LimitLawD1> {
        let rows = self
            .limit
            .as_ref()
            .ok_or_else(|| HarnessError::MissingArtifact(LIMIT_FILE.into()))?;
        Ok(LimitLawD1::from_quadratics(self.plan.model.r_hat_zero(), rows.iter().map(column).collect()))
    }
}

/// Runs `suites` in the given order.
pub fn run_suites(artifacts: &Artifacts, suites: &[SuiteName]) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    for &suite in suites {
        let found = run_suite(artifacts, suite).map_err(|e| match e {
            HarnessError::Core(source) => HarnessError::Suite { suite: suite.as_str().into(), source },
            other => other,
        })?;
        reports.extend(found.into_iter().map(|r| r.with_meta("suite", suite.as_str())));
    }
    Ok(reports)
}

fn run_suite(a: &Artifacts, suite: SuiteName) -> Result<Vec<TestReport>> {
    let plan = &a.plan;
    let n = plan.largest_n();
    let overridden = plan.config.scaling_override.is_some();
    let mixture = plan.has_mixture_limit();
    match suite {
        SuiteName::Variance => {
            let mut out = Vec::new();
            for &n in &plan.config.n_ladder {
                let samples = a.endpoint_samples(n);
                let oracle = a.oracle("variance_t1", Some(n))?;
                let mut report = variance_test(&samples, oracle)?
                    .renamed(format!("variance_test[n={n}]"))
                    .with_meta("n", n);
                if overridden {
                    report = report.with_meta("scaling", "sqrt_n");
                }
                out.push(report);
                if !overridden && plan.dim() == 2 && !plan.model.is_degenerate() {
                    // The same samples under sqrt(n) must miss the oracle by a factor ln n.
                    let factor = scaling_factor(n as f64, 2, plan.mode())? / (n as f64).sqrt();
                    let control: Vec<f64> = samples.iter().map(|x| x * factor).collect();
                    out.push(
                        variance_test(&control, oracle)?
                            .as_negative_control()
                            .renamed(format!("variance_test[n={n},sqrt_n_control]"))
                            .with_meta("n", n)
                            .with_meta("scaling", "sqrt_n"),
                    );
                }
            }
            Ok(out)
        }
        SuiteName::Ecf => {
            let samples = a.probe_samples(n)?;
            let variance = a.oracle("probe_variance", Some(n))?;
            let seed = replica_seed(plan.config.master_seed, n, 0, StreamTag::Bootstrap);
            let gaussian = |theta: f64| ((-0.5 * theta * theta * variance).exp(), 0.0);
            if mixture {
                let law = a.limit_law(|r| r.probe)?;
                // Match the limit law to the finite-n variance.
                let stretch = (variance / law.variance()).sqrt();
                let limit = ecf_test(&samples, |theta| law.cf(theta * stretch), seed)?
                    .renamed("ecf_test[limit]")
                    .with_meta("n", n)
                    .with_meta("variance_stretch", stretch);
                let control = ecf_test(&samples, gaussian, seed)?
                    .as_negative_control()
                    .renamed("ecf_test[gaussian_control]")
                    .with_meta("n", n);
                Ok(vec![limit, control])
            } else {
                Ok(vec![ecf_test(&samples, gaussian, seed)?.renamed("ecf_test[gaussian]").with_meta("n", n)])
            }
        }
        SuiteName::Normality => {
            let report = normality_test(&a.endpoint_samples(n), a.oracle("variance_t1", Some(n))?)?.with_meta("n", n);
            Ok(vec![if mixture { report.as_negative_control().renamed("normality_test[mixture_control]") } else { report }])
        }
        SuiteName::Kurtosis => {
            let mode = if mixture {
                let (target, target_se) = a.limit_law(|r| r.unit)?.excess_kurtosis();
                KurtosisMode::MixtureLimit { target, target_se }
            } else {
                KurtosisMode::GaussianLimit
            };
            Ok(vec![kurtosis_test(&a.endpoint_samples(n), mode)?.with_meta("n", n)])
        }
        SuiteName::MomentScaling => {
            let steps = plan.times.len() - 1;
            let uniform = plan
                .times
                .iter()
                .enumerate()
                .all(|(k, t)| (t - k as f64 / steps as f64).abs() <= 1e-12);
            if !uniform {
                return Err(HarnessError::Config("moment_scaling needs a uniform t_grid from 0 to 1".into()));
            }
            let (beta, target) = if mixture { (2.0, 1.5) } else { (4.0, 2.0) };
            let sample = GridSample { step: 1.0 / steps as f64, trajectories: a.replicas(n) };
            Ok(vec![moment_scaling_test(&sample, beta, target)?.with_meta("n", n)])
        }
        SuiteName::CrossTerms => {
            let cond = conditional(a)?;
            let ladder: Vec<Rung> = cond
                .iter()
                .map(|(&n, rows)| Rung { n: n as f64, samples: rows.iter().map(|r| r.cross).collect() })
                .collect();
            let oracles = cond
                .keys()
                .map(|&n| a.oracle("cross_mean", Some(n)).map(|v| format!("{v:.6e}")))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![cross_term_test(plan.dim(), &ladder)?.with_meta("oracle_means", oracles.join(","))])
        }
        SuiteName::Concentration => {
            let cond = conditional(a)?;
            let ladder = cond
                .iter()
                .map(|(&n, rows)| {
                    let samples = rows
                        .iter()
                        .map(|r| r.variance)
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| HarnessError::Config("concentration needs conditional.variance = true".into()))?;
                    Ok(Rung { n: n as f64, samples })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![concentration_test(plan.dim(), &ladder)?])
        }
    }
}

fn conditional(a: &Artifacts) -> Result<&BTreeMap<u64, Vec<ConditionalRow>>> {
    a.conditional
        .as_ref()
        .ok_or_else(|| HarnessError::MissingArtifact(CONDITIONAL_FILE.into()))
}
