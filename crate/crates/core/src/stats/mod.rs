//! Estimators and hypothesis tests turning replica samples and oracle
//! targets into verdicts. Thresholds live in [`policy`].

pub mod policy;

use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, precondition, Error, Result};
use crate::math::{kolmogorov_sf, linear_fit, normal_cdf};
use crate::rng::stream;
use policy::*;

/// Whether a test is meant to accept its null or, as a negative control, to reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Expectation {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub standard_error: Option<f64>,
    pub p_value: Option<f64>,
    pub target: Option<f64>,
    pub policy: String,
    pub expectation: Expectation,
    /// Outcome of the test itself: the null was not rejected.
    pub accepted: bool,
    pub metadata: BTreeMap<String, String>,
}

impl TestReport {
    fn new(name: &str, statistic: f64, policy: String, accepted: bool) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            standard_error: None,
            p_value: None,
            target: None,
            policy,
            expectation: Expectation::Accept,
            accepted,
            metadata: BTreeMap::new(),
        }
    }

    /// True when the outcome matches the expectation.
    pub fn passed(&self) -> bool {
        self.accepted == (self.expectation == Expectation::Accept)
    }

    /// Marks the report as a negative control that must reject.
    pub fn as_negative_control(mut self) -> Self {
        self.expectation = Expectation::Reject;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

fn require(len: usize, min: usize, what: &str) -> Result<()> {
    if len < min {
        return Err(precondition(alloc::format!("{what} needs at least {min} samples, got {len}")));
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample variance from the fourth central moment.
pub fn variance_standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Moment estimator of the excess kurtosis.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Delete-a-group jackknife estimate and standard error of `stat`.
pub fn jackknife<T>(items: &[T], groups: usize, stat: impl Fn(&[&T]) -> f64) -> (f64, f64) {
    let all: Vec<&T> = items.iter().collect();
    let full = stat(&all);
    let g = groups.min(items.len()).max(2);
    let partial: Vec<f64> = (0..g)
        .map(|k| {
            let kept: Vec<&T> = items
                .iter()
                .enumerate()
                .filter(|(i, _)| i * g / items.len() != k)
                .map(|(_, x)| x)
                .collect();
            stat(&kept)
        })
        .collect();
    let pm = mean(&partial);
    let var = partial.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
    (full, var.sqrt())
}

/// z-test of the sample variance against `oracle`.
pub fn variance_test(samples: &[f64], oracle: f64) -> Result<TestReport> {
    require(samples.len(), MIN_VARIANCE_REPLICAS, "variance_test")?;
    let s2 = variance(samples);
    let se = variance_standard_error(samples);
    let diff = s2 - oracle;
    let z = if diff == 0.0 { 0.0 } else { diff / se };
    let mut report = TestReport::new(
        "variance_test",
        s2,
        alloc::format!("|z| <= {Z_GATE}"),
        z.is_finite() && z.abs() <= Z_GATE,
    );
    report.standard_error = Some(se);
    report.target = Some(oracle);
    Ok(report.with_meta("z", z).with_meta("replicas", samples.len()))
}

/// Frequencies of the ECF comparison for samples with standard deviation `sd`.
pub fn ecf_grid(sd: f64) -> Vec<f64> {
    (1..=ECF_THETA_POINTS)
        .map(|k| k as f64 * ECF_THETA_SPAN / (ECF_THETA_POINTS as f64 * sd))
        .collect()
}

/// Compares the empirical characteristic function of `samples` with a real
/// target. `target(theta)` returns the target value and its own Monte Carlo
/// standard error. The band half-width is the bootstrap quantile of the sup
/// deviation.
pub fn ecf_test(samples: &[f64], target: impl Fn(f64) -> (f64, f64), seed: u64) -> Result<TestReport> {
    require(samples.len(), MIN_ECF_REPLICAS, "ecf_test")?;
    let sd = variance(samples).sqrt();
    if !(sd > 0.0) {
        return Err(invalid("ecf_test needs samples with positive spread"));
    }
    let thetas = ecf_grid(sd);
    let m = samples.len();
    let k = thetas.len();
    let mut table = vec![Complex64::new(0.0, 0.0); m * k];
    for (i, x) in samples.iter().enumerate() {
        for (j, theta) in thetas.iter().enumerate() {
            table[i * k + j] = Complex64::from_polar(1.0, theta * x);
        }
    }
    let mut ecf = vec![Complex64::new(0.0, 0.0); k];
    for row in table.chunks_exact(k) {
        for (e, v) in ecf.iter_mut().zip(row) {
            *e += v;
        }
    }
    ecf.iter_mut().for_each(|e| *e /= m as f64);

    let mut rng = stream(seed);
    let mut sups = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut acc = vec![Complex64::new(0.0, 0.0); k];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for _ in 0..m {
            let i = rng.random_range(0..m);
            for (a, v) in acc.iter_mut().zip(&table[i * k..(i + 1) * k]) {
                *a += v;
            }
        }
        let sup = acc
            .iter()
            .zip(&ecf)
            .map(|(a, e)| (a / m as f64 - e).norm())
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    sups.sort_by(f64::total_cmp);
    let band = sups[((BAND_LEVEL * BOOTSTRAP_RESAMPLES as f64) as usize).min(BOOTSTRAP_RESAMPLES - 1)];

    let mut worst = 0.0f64;
    let mut worst_theta = 0.0;
    let mut inside = true;
    for (theta, e) in thetas.iter().zip(&ecf) {
        let (value, se) = target(*theta);
        let dev = (e - Complex64::new(value, 0.0)).norm();
        if dev > worst {
            worst = dev;
            worst_theta = *theta;
        }
        if dev > band + Z_GATE * se {
            inside = false;
        }
    }
    let (at_zero, _) = target(0.0);
    let mut report = TestReport::new(
        "ecf_test",
        worst,
        alloc::format!("sup |ECF - target| inside {}% bootstrap band + {Z_GATE} target SE", BAND_LEVEL * 100.0),
        inside,
    );
    report.target = Some(at_zero);
    Ok(report
        .with_meta("band", band)
        .with_meta("worst_theta", worst_theta)
        .with_meta("theta_max", thetas[k - 1])
        .with_meta("sd", sd))
}

/// Kolmogorov-Smirnov test of `samples / sqrt(variance_target)` against N(0, 1).
pub fn normality_test(samples: &[f64], variance_target: f64) -> Result<TestReport> {
    require(samples.len(), MIN_NORMALITY_SAMPLES, "normality_test")?;
    if !(variance_target > 0.0) {
        return Err(invalid("normality_test needs a positive variance target"));
    }
    let scale = variance_target.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|x| x / scale).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let d = z
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal_cdf(*x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let root = n.sqrt();
    let p = kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
    let mut report = TestReport::new("normality_test", d, alloc::format!("p > {P_VALUE_FLOOR}"), p > P_VALUE_FLOOR);
    report.p_value = Some(p);
    report.target = Some(variance_target);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KurtosisMode {
    /// Excess kurtosis zero.
    GaussianLimit,
    /// Excess kurtosis positive and equal to `target` (with its own SE).
    MixtureLimit { target: f64, target_se: f64 },
}

pub fn kurtosis_test(samples: &[f64], mode: KurtosisMode) -> Result<TestReport> {
    require(samples.len(), MIN_KURTOSIS_SAMPLES, "kurtosis_test")?;
    let (g2, se) = jackknife(samples, JACKKNIFE_GROUPS, |xs| {
        let v: Vec<f64> = xs.iter().map(|x| **x).collect();
        excess_kurtosis(&v)
    });
    let mut report = match mode {
        KurtosisMode::GaussianLimit => {
            let mut r = TestReport::new("kurtosis_test", g2, alloc::format!("|g2| <= {Z_GATE} SE"), g2.abs() <= Z_GATE * se);
            r.target = Some(0.0);
            r
        }
        KurtosisMode::MixtureLimit { target, target_se } => {
            let combined = (se * se + target_se * target_se).sqrt();
            let positive = g2 > Z_GATE * se;
            let matches = (g2 - target).abs() <= Z_GATE * combined;
            let mut r = TestReport::new(
                "kurtosis_test",
                g2,
                alloc::format!("g2 > {Z_GATE} SE and |g2 - target| <= {Z_GATE} combined SE"),
                positive && matches,
            );
            r.target = Some(target);
            r = r
                .with_meta("positive", positive)
                .with_meta("matches_target", matches)
                .with_meta("target_se", target_se);
            r
        }
    };
    report.standard_error = Some(se);
    Ok(report)
}

/// Trajectory sample on a uniform time grid `0, step, 2 step, ..., 1`.
pub struct GridSample<'a> {
    pub step: f64,
    pub trajectories: &'a [Vec<f64>],
}

fn gap_lags(step: f64) -> Result<Vec<(f64, usize)>> {
    MOMENT_GAP_EXPONENTS
        .iter()
        .map(|&e| {
            let gap = libm::ldexp(1.0, -e);
            let lag = gap / step;
            let rounded = libm::round(lag);
            if rounded < 1.0 || (lag - rounded).abs() > 1e-9 {
                return Err(precondition(alloc::format!("time grid step {step} does not resolve gap {gap}")));
            }
            Ok((gap, rounded as usize))
        })
        .collect()
}

/// Regresses `log E|X(t + gap) - X(t)|^beta` on `log gap` and requires the
/// slope to reach `target_slope - 3 SE`, with the SE from a replica jackknife.
pub fn moment_scaling_test(sample: &GridSample<'_>, beta: f64, target_slope: f64) -> Result<TestReport> {
    let lags = gap_lags(sample.step)?;
    if sample.trajectories.len() < JACKKNIFE_GROUPS {
        return Err(precondition("moment_scaling_test needs more replicas than jackknife groups"));
    }
    let points = libm::round(1.0 / sample.step) as usize + 1;
    if sample.trajectories.iter().any(|t| t.len() != points) {
        return Err(precondition("trajectories must cover the whole uniform grid"));
    }
    // Per-replica moment sums for each gap.
    let per_replica: Vec<Vec<f64>> = sample
        .trajectories
        .iter()
        .map(|x| {
            lags.iter()
                .map(|&(_, lag)| {
                    let count = points - lag;
                    (0..count).map(|i| (x[i + lag] - x[i]).abs().powf(beta)).sum::<f64>() / count as f64
                })
                .collect()
        })
        .collect();
    let log_gaps: Vec<f64> = lags.iter().map(|(g, _)| libm::log(*g)).collect();
    let slope_of = |rows: &[&Vec<f64>]| {
        let moments: Vec<f64> = (0..lags.len())
            .map(|j| libm::log(rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64))
            .collect();
        linear_fit(&log_gaps, &moments).0
    };
    let (slope, se) = jackknife(&per_replica, JACKKNIFE_GROUPS, slope_of);
    let accepted = slope.is_finite() && slope >= target_slope - Z_GATE * se;
    let mut report = TestReport::new(
        "moment_scaling_test",
        slope,
        alloc::format!("slope >= target - {Z_GATE} SE"),
        accepted,
    );
    report.standard_error = Some(se);
    report.target = Some(target_slope);
    Ok(report.with_meta("beta", beta))
}

/// Ordered times `0 = t_0 < t_1 < ... < t_N <= 1` with increment weights.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiniteDimProbe {
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl FiniteDimProbe {
    /// `times` lists `t_1..t_N`; `t_0 = 0` is implicit.
    pub fn new(times: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != weights.len() {
            return Err(invalid("probe needs matching nonempty times and weights"));
        }
        let mut prev = 0.0;
        for &t in &times {
            if !(t > prev && t <= 1.0) {
                return Err(invalid("probe times must increase strictly inside (0, 1]"));
            }
            prev = t;
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("probe weights must be finite"));
        }
        Ok(Self { times, weights })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Increment windows `(t_{i-1}, t_i)`.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let w = (prev, t);
                prev = t;
                w
            })
            .collect()
    }

    /// `Y = sum_i alpha_i (X(t_i) - X(t_{i-1}))` for a trajectory on `grid`.
    pub fn evaluate(&self, grid: &[f64], values: &[f64]) -> Result<f64> {
        let at = |t: f64| -> Result<f64> {
            if t == 0.0 && grid.first().is_none_or(|g| *g > 0.0) {
                return Ok(0.0);
            }
            grid.iter()
                .position(|g| (g - t).abs() <= 1e-12)
                .map(|i| values[i])
                .ok_or_else(|| precondition(alloc::format!("probe time {t} is not on the trajectory grid")))
        };
        let mut total = 0.0;
        for ((a, b), w) in self.windows().into_iter().zip(&self.weights) {
            total += w * (at(b)? - at(a)?);
        }
        Ok(total)
    }
}

/// Requires two windows with disjoint interiors.
pub fn check_disjoint(first: (f64, f64), second: (f64, f64)) -> Result<()> {
    if first.0 < second.1 && second.0 < first.1 {
        return Err(precondition("cross terms need disjoint windows"));
    }
    Ok(())
}

/// Replica samples of one rung of a ladder indexed by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub n: f64,
    pub samples: Vec<f64>,
}

/// Cross terms: `|mean|` strictly decreasing along the ladder and the last
/// mean within 3 SE of zero. In two dimensions the products `mean ln n` are
/// recorded against the heuristic `1 / ln n` envelope without gating.
pub fn cross_term_test(dim: usize, ladder: &[Rung]) -> Result<TestReport> {
    if ladder.len() < 2 {
        return Err(precondition("cross_term_test needs at least two ladder rungs"));
    }
    let means: Vec<f64> = ladder.iter().map(|r| mean(&r.samples)).collect();
    let last = &ladder[ladder.len() - 1];
    let se = (variance(&last.samples) / last.samples.len() as f64).sqrt();
    let decreasing = means.windows(2).all(|w| w[1].abs() < w[0].abs());
    let final_mean = means[means.len() - 1];
    let near_zero = final_mean.abs() < Z_GATE * se;
    let mut report = TestReport::new(
        "cross_term_test",
        final_mean,
        alloc::format!("|mean| strictly decreasing and final |mean| < {Z_GATE} SE"),
        decreasing && near_zero,
    );
    report.standard_error = Some(se);
    report.target = Some(0.0);
    report = report
        .with_meta("decreasing", decreasing)
        .with_meta("endpoint_within_gate", near_zero)
        .with_meta("means", join(&means));
    if dim == 2 {
        let envelope: Vec<f64> = ladder.iter().zip(&means).map(|(r, m)| m * libm::log(r.n)).collect();
        report = report.with_meta("mean_times_ln_n", join(&envelope));
    }
    Ok(report)
}

/// Conditional variances: sample variance strictly decreasing along the
/// ladder and a final coefficient of variation below the ceiling.
pub fn concentration_test(dim: usize, ladder: &[Rung]) -> Result<TestReport> {
    if dim < 2 {
        return Err(Error::InvalidMode {
            dim,
            reason: "conditional variances stay random in one dimension".into(),
        });
    }
    if ladder.len() < 2 {
        return Err(precondition("concentration_test needs at least two ladder rungs"));
    }
    let variances: Vec<f64> = ladder.iter().map(|r| variance(&r.samples)).collect();
    let last = &ladder[ladder.len() - 1];
    let cv = variance(&last.samples).sqrt() / mean(&last.samples);
    let decreasing = variances.windows(2).all(|w| w[1] < w[0]);
    let report = TestReport::new(
        "concentration_test",
        cv,
        alloc::format!("Var strictly decreasing and final CV < {CV_CEILING}"),
        decreasing && cv.abs() < CV_CEILING,
    );
    Ok(report.with_meta("decreasing", decreasing).with_meta("variances", join(&variances)))
}

/// Regularised upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        1.0 - sum * libm::exp(log_prefix)
    } else {
        // Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        libm::exp(log_prefix) * h
    }
}

/// Pearson chi-square test of equal expected counts.
pub fn uniformity_test(counts: &[f64]) -> Result<TestReport> {
    if counts.len() < 2 {
        return Err(precondition("uniformity_test needs at least two cells"));
    }
    let expected = mean(counts);
    if !(expected > 0.0) {
        return Err(invalid("uniformity_test needs positive counts"));
    }
    let chi2: f64 = counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum();
    let df = counts.len() as f64 - 1.0;
    let p = gamma_q(df / 2.0, chi2 / 2.0);
    let mut report = TestReport::new("uniformity_test", chi2, alloc::format!("p > {P_VALUE_FLOOR}"), p > P_VALUE_FLOOR);
    report.p_value = Some(p);
    Ok(report.with_meta("df", df))
}

fn join(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| alloc::format!("{x:.6e}")).collect();
    parts.join(",")
}

#[cfg(test)]
mod tests;
