use std::fs;
use std::path::Path;
use std::process::Command;

use scenery::config::{ExperimentConfig, PotentialSpec, ProbeSpec, SamplerKind, ScalingOverride, SuiteName, TimeGridSpec};
use scenery::harness::{run_experiment, simulate, CHUNK};
use scenery::io::*;
use scenery::{Artifacts, HarnessError};
use scenery_core::functional::ScalingMode;
use scenery_core::spectra::{CovarianceSpec, Profile, ShapeSpec};

fn poisson_config(dim: usize) -> ExperimentConfig {
    ExperimentConfig {
        dim,
        potential: PotentialSpec::Poisson(ShapeSpec::single(dim, Profile::Tent, 1.0)),
        mode: ScalingMode::Nondegenerate,
        n_ladder: vec![32, 64],
        t_grid: TimeGridSpec::Steps(64),
        replicas: 4 * CHUNK + 7,
        kappa: 10.0,
        master_seed: 2024,
        suites: vec![SuiteName::Variance, SuiteName::MomentScaling, SuiteName::CrossTerms],
        output_dir: None,
        sampler: SamplerKind::Grid,
        features: 4096,
        scaling_override: None,
        probe: ProbeSpec::default(),
        conditional: Some(scenery::config::ConditionalSpec {
            n_ladder: vec![16, 32],
            replicas: 30,
            windows: [(0.0, 0.5), (0.5, 1.0)],
            variance: false,
        }),
        limit_replicas: 0,
        dumps: 1,
    }
}

const CSV_ARTIFACTS: [&str; 3] = [TRAJECTORIES_FILE, ORACLES_FILE, CONDITIONAL_FILE];

fn assert_same_artifacts(a: &Path, b: &Path) {
    for name in CSV_ARTIFACTS.iter().chain([&REPORTS_FILE, &SUMMARY_FILE, &METADATA_FILE]) {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let config = poisson_config(2);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config, a.path(), Some(1)).unwrap();
    run_experiment(&config, b.path(), Some(1)).unwrap();
    assert_same_artifacts(a.path(), b.path());
    assert!(a.path().join(DUMPS_DIR).join("path_n64_r0.csv").exists());
    assert!(a.path().join(DUMPS_DIR).join("points_n64_r0.csv").exists());
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let config = poisson_config(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config, a.path(), Some(1)).unwrap();
    run_experiment(&config, b.path(), Some(4)).unwrap();
    assert_same_artifacts(a.path(), b.path());
}

#[test]
fn interrupted_runs_resume_from_completed_parts() {
    let config = poisson_config(2);
    let (full, resumed) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config, full.path(), None).unwrap();
    let first = simulate(&config, resumed.path(), None).unwrap();
    assert_eq!(first.skipped_parts, 0);
    // Lose one part and the merged outputs, as after a crash.
    fs::remove_file(resumed.path().join(PARTS_DIR).join("traj_n64_c00001.csv")).unwrap();
    fs::remove_file(resumed.path().join(TRAJECTORIES_FILE)).unwrap();
    let second = run_experiment(&config, resumed.path(), None).unwrap();
    assert_eq!(second.simulation.computed_parts, 1);
    assert_eq!(second.simulation.skipped_parts, first.computed_parts - 1);
    assert_same_artifacts(full.path(), resumed.path());
}

#[test]
fn a_directory_holds_one_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = poisson_config(2);
    config.conditional = None;
    simulate(&config, dir.path(), None).unwrap();
    config.master_seed += 1;
    assert!(matches!(simulate(&config, dir.path(), None), Err(HarnessError::Config(_))));
}

#[test]
fn inconsistent_degeneracy_is_rejected_before_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = poisson_config(2);
    config.mode = ScalingMode::Degenerate;
    assert!(matches!(simulate(&config, dir.path(), None), Err(HarnessError::Config(_))));
    assert!(!dir.path().join(TRAJECTORIES_FILE).exists());
}

#[test]
fn empty_directory_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Artifacts::load(dir.path()), Err(HarnessError::MissingArtifact(_))));
}

#[test]
fn suites_recompute_identically_from_disk() {
    let config = poisson_config(2);
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&config, dir.path(), None).unwrap();
    let artifacts = Artifacts::load(dir.path()).unwrap();
    let again = scenery::run_suites(&artifacts, &config.suites).unwrap();
    assert_eq!(outcome.reports, again);
    assert!(outcome.reports.iter().any(|r| r.name.contains("sqrt_n_control") && r.passed()));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scenery"))
}

fn write_config(dir: &Path, config: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join("experiment.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

#[test]
fn cli_report_exit_codes() {
    let work = tempfile::tempdir().unwrap();
    let mut config = poisson_config(2);
    config.conditional = None;
    config.suites = vec![SuiteName::Variance];
    config.replicas = 400;
    config.n_ladder = vec![256];
    let good = write_config(work.path(), &config);
    let out = work.path().join("good");
    let status = cli().args(["simulate", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let report = cli().args(["report", "--in"]).arg(&out).output().unwrap();
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stdout));
    let stdout = String::from_utf8_lossy(&report.stdout);
    assert!(stdout.contains("variance_test[n=256]"));

    config.scaling_override = Some(ScalingOverride::SqrtN);
    let bad_dir = work.path().join("bad");
    fs::create_dir(&bad_dir).unwrap();
    let bad = write_config(&bad_dir, &config);
    let out = work.path().join("mis-scaled");
    let status = cli().args(["simulate", "--config"]).arg(&bad).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let report = cli().args(["report", "--in"]).arg(&out).output().unwrap();
    assert!(!report.status.success());
    assert!(String::from_utf8_lossy(&report.stderr).contains("variance_test"));

    let empty = work.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let report = cli().args(["report", "--in"]).arg(&empty).output().unwrap();
    assert!(!report.status.success());
    assert!(String::from_utf8_lossy(&report.stderr).contains("missing artifact"));
}

#[test]
fn cli_sigma_reads_tabulated_models() {
    let work = tempfile::tempdir().unwrap();
    fs::write(work.path().join("tent.csv"), "x,R\n0,1\n0.5,0.5\n1,0\n").unwrap();
    let mut config = poisson_config(1);
    config.potential = PotentialSpec::GaussianTable { dim: 1, path: "tent.csv".into() };
    config.conditional = None;
    let path = write_config(work.path(), &config);
    let out = cli().args(["sigma", "--config"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // The tent profile integrates to R^(0) = 1.
    assert!(String::from_utf8_lossy(&out.stdout).contains("| R^(0) | 1.0000000000e0 |"));

    let gaussian = ExperimentConfig {
        potential: PotentialSpec::Gaussian(CovarianceSpec::TensorTriangular { dim: 1, variance: 1.0, scale: 1.0 }),
        ..config
    };
    let path = write_config(work.path(), &gaussian);
    let out = cli().args(["test", "--config"]).arg(&path).args(["--suite", "variance", "--out"]).arg(work.path().join("g")).output().unwrap();
    assert!(out.status.code().is_some());
    assert!(String::from_utf8_lossy(&out.stdout).contains("variance_test[n=64]"));
}
