//! Human-readable and machine-readable summaries.

use std::fmt::Write as _;
use std::path::Path;

use scenery_core::functional::{scaling_factor, ScalingMode};
use scenery_core::oracles::finite_n_variance;
use scenery_core::spectra::{sigma_limit, sigma_routes};
use scenery_core::stats::{variance, Expectation, TestReport};

use crate::config::RunPlan;
use crate::error::Result;
use crate::io::{write_atomic, write_json, REPORTS_FILE, SUMMARY_FILE};
use crate::suites::Artifacts;

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "-".into(), |v| format!("{v:.5e}"))
}

/// Markdown summary: verdict table, then the variance ladder against its oracle.
pub fn render_summary(artifacts: &Artifacts, reports: &[TestReport]) -> String {
    let plan = &artifacts.plan;
    let mut out = String::new();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "# Summary\n");
    let _ = writeln!(
        out,
        "d = {}, mode = {:?}, replicas = {}, master seed = {}\n",
        plan.dim(),
        plan.mode(),
        plan.config.replicas,
        plan.config.master_seed
    );
    let _ = writeln!(out, "{} reports, {} failing.\n", reports.len(), failed);
    let _ = writeln!(out, "| test | statistic | SE | p | target | policy | expects | verdict |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for r in reports {
        let expects = match r.expectation {
            Expectation::Accept => "accept",
            Expectation::Reject => "reject",
        };
        let _ = writeln!(
            out,
            "| {} | {:.5e} | {} | {} | {} | {} | {} | {} |",
            r.name,
            r.statistic,
            cell(r.standard_error),
            cell(r.p_value),
            cell(r.target),
            r.policy,
            expects,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "\n## Variance ladder\n");
    let _ = writeln!(out, "| n | sample Var X_n(1) | oracle | ratio |");
    let _ = writeln!(out, "|---|---|---|---|");
    for &n in artifacts.trajectories.keys() {
        let sample = variance(&artifacts.endpoint_samples(n));
        if let Ok(oracle) = artifacts.oracle("variance_t1", Some(n)) {
            let _ = writeln!(out, "| {n} | {sample:.5e} | {oracle:.5e} | {:.4} |", sample / oracle);
        }
    }
    out
}

pub fn write_reports(dir: &Path, artifacts: &Artifacts, reports: &[TestReport]) -> Result<()> {
    write_json(&dir.join(REPORTS_FILE), &reports)?;
    write_atomic(&dir.join(SUMMARY_FILE), render_summary(artifacts, reports).as_bytes())
}

/// Limit constants of the planned model, with the finite-n oracle ladder.
pub fn sigma_table(plan: &RunPlan) -> Result<String> {
    let model = &plan.model;
    let d = plan.dim();
    let mut out = String::new();
    let _ = writeln!(out, "| quantity | value |");
    let _ = writeln!(out, "|---|---|");
    let _ = writeln!(out, "| d | {d} |");
    let _ = writeln!(out, "| mode | {:?} |", plan.mode());
    let _ = writeln!(out, "| R(0) | {:.10e} |", model.variance());
    let _ = writeln!(out, "| R^(0) | {:.10e} |", model.r_hat_zero());
    let _ = writeln!(out, "| support radius | {:.10e} |", model.support_radius());
    let sigma = sigma_limit(model, d, plan.mode())?;
    let _ = writeln!(out, "| sigma | {sigma:.10e} |");
    if d >= 3 || plan.mode() == ScalingMode::Degenerate {
        let routes = sigma_routes(model)?;
        let _ = writeln!(out, "| sigma^2 spectral | {:.10e} |", routes.spectral);
        let _ = writeln!(out, "| sigma^2 real space | {:.10e} |", routes.real_space);
        let _ = writeln!(out, "| relative gap | {:.3e} |", routes.relative_gap());
    }
    let _ = writeln!(out, "\n| n | a(n) | Var X_n(1) | tolerance |");
    let _ = writeln!(out, "|---|---|---|---|");
    for &n in &plan.config.n_ladder {
        let a = scaling_factor(n as f64, d, plan.mode())?;
        let v = finite_n_variance(model, n as f64, 1.0, plan.mode())?;
        let _ = writeln!(out, "| {n} | {a:.6e} | {:.10e} | {:.1e} |", v.value, v.tolerance);
    }
    Ok(out)
}
