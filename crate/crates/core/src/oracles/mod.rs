//! Independent reference values: exact finite-n variances from the heat
//! moment, and the one-dimensional limit law through simulated local times.

use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::brownian::sample_path;
use crate::error::{precondition, Error, Result};
use crate::functional::{scaling_factor, ScalingMode};
use crate::quad::{integrate_breaks, Tolerance};
use crate::spectra::CovarianceModel;
use crate::stats::policy::JACKKNIFE_GROUPS;
use crate::stats::{jackknife, FiniteDimProbe};

/// Relative accuracy of every quadrature oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-8;
/// Path steps per unit time when simulating local times.
pub const LIMIT_STEPS_PER_UNIT: f64 = 16384.0;

/// `E int L_t(x)^2 dx = ENERGY_CONSTANT t^{3/2}` for one-dimensional Brownian local time.
pub const ENERGY_CONSTANT: f64 = 1.063_846_081_070_487_3;

/// An oracle value with its absolute numerical tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub tolerance: f64,
}

impl OracleValue {
    fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            tolerance: self.tolerance * c.abs(),
        }
    }
}

/// `F(T) = 2 int_0^T (T - u) G(u) du` with `G(u) = E R(B_u)`, the variance
/// of the unnormalised time integral of the scenery along the path.
pub fn variance_kernel(model: &CovarianceModel, horizon: f64) -> Result<OracleValue> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(crate::error::invalid("variance horizon must be finite and nonnegative"));
    }
    if horizon == 0.0 {
        return Ok(OracleValue { value: 0.0, tolerance: 0.0 });
    }
    let scale = model.support_radius() * model.support_radius();
    // Geometric breaks resolve both the short-time shape of G and its slow tail.
    let floor = 1e-6 * scale;
    let mut breaks = vec![horizon];
    let mut edge = horizon;
    while edge > floor {
        edge *= 0.5;
        breaks.push(edge);
    }
    breaks.push(0.0);
    breaks.reverse();
    let mut failure = None;
    let estimate = integrate_breaks(
        |u| match model.heat_moment(u) {
            Ok(g) => 2.0 * (horizon - u) * g,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &breaks,
        Tolerance {
            abs: 1e-300,
            rel: 0.1 * ORACLE_TOLERANCE,
            max_intervals: 20_000,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let estimate = estimate?;
    Ok(OracleValue {
        value: estimate.value,
        tolerance: estimate.error.max(ORACLE_TOLERANCE * estimate.value.abs()),
    })
}

/// Evaluates `F` once per distinct horizon.
struct KernelCache<'a> {
    model: &'a CovarianceModel,
    horizon_scale: f64,
    values: HashMap<u64, OracleValue>,
}

impl<'a> KernelCache<'a> {
    fn new(model: &'a CovarianceModel, horizon_scale: f64) -> Self {
        Self { model, horizon_scale, values: HashMap::new() }
    }

    fn get(&mut self, gap: f64) -> Result<OracleValue> {
        let gap = gap.abs();
        if let Some(v) = self.values.get(&gap.to_bits()) {
            return Ok(*v);
        }
        let v = variance_kernel(self.model, self.horizon_scale * gap)?;
        self.values.insert(gap.to_bits(), v);
        Ok(v)
    }
}

fn window_term(f: &mut impl FnMut(f64) -> Result<OracleValue>, first: (f64, f64), second: (f64, f64)) -> Result<OracleValue> {
    let (a, b) = first;
    let (c, d) = second;
    let terms = [(d - a, 1.0), (c - b, 1.0), (d - b, -1.0), (c - a, -1.0)];
    let mut value = 0.0;
    let mut tolerance = 0.0;
    for (gap, sign) in terms {
        let v = f(gap)?;
        value += sign * v.value;
        tolerance += v.tolerance;
    }
    Ok(OracleValue { value: 0.5 * value, tolerance: 0.5 * tolerance })
}

fn check_window(w: (f64, f64)) -> Result<()> {
    if !(0.0 <= w.0 && w.0 <= w.1 && w.1 <= 1.0) {
        return Err(crate::error::invalid("windows must satisfy 0 <= start <= end <= 1"));
    }
    Ok(())
}

/// `Var X_n(t) = F(n t) / a(n)^2`.
pub fn finite_n_variance(model: &CovarianceModel, n: f64, t: f64, mode: ScalingMode) -> Result<OracleValue> {
    check_window((0.0, t))?;
    let a = scaling_factor(n, model.dim(), mode)?;
    Ok(variance_kernel(model, n * t)?.scaled(1.0 / (a * a)))
}

/// `Cov(X_n(b) - X_n(a), X_n(d) - X_n(c))` for windows `(a, b)` and `(c, d)`.
pub fn window_covariance(
    model: &CovarianceModel,
    n: f64,
    first: (f64, f64),
    second: (f64, f64),
    mode: ScalingMode,
) -> Result<OracleValue> {
    check_window(first)?;
    check_window(second)?;
    let a = scaling_factor(n, model.dim(), mode)?;
    let mut cache = KernelCache::new(model, n);
    let cov = window_term(&mut |g| cache.get(g), first, second)?;
    Ok(cov.scaled(1.0 / (a * a)))
}

/// Variance of the probe statistic `sum_i alpha_i (X_n(t_i) - X_n(t_{i-1}))`.
pub fn probe_variance(model: &CovarianceModel, n: f64, probe: &FiniteDimProbe, mode: ScalingMode) -> Result<OracleValue> {
    let a = scaling_factor(n, model.dim(), mode)?;
    let mut cache = KernelCache::new(model, n);
    let total = quadratic_form(probe, |w1, w2| window_term(&mut |g| cache.get(g), w1, w2))?;
    Ok(total.scaled(1.0 / (a * a)))
}

fn quadratic_form(
    probe: &FiniteDimProbe,
    mut cov: impl FnMut((f64, f64), (f64, f64)) -> Result<OracleValue>,
) -> Result<OracleValue> {
    let windows = probe.windows();
    let weights = probe.weights();
    let mut value = 0.0;
    let mut tolerance = 0.0;
    for (i, wi) in windows.iter().enumerate() {
        for (j, wj) in windows.iter().enumerate() {
            let c = cov(*wi, *wj)?;
            value += weights[i] * weights[j] * c.value;
            tolerance += (weights[i] * weights[j]).abs() * c.tolerance;
        }
    }
    Ok(OracleValue { value, tolerance })
}

/// `E int L_t(x)^2 dx`.
pub fn local_time_energy(t: f64) -> f64 {
    ENERGY_CONSTANT * t.max(0.0).powf(1.5)
}

fn require_d1(model: &CovarianceModel) -> Result<()> {
    if model.dim() != 1 || model.is_degenerate() {
        return Err(Error::InvalidMode {
            dim: model.dim(),
            reason: "the local-time limit needs a nondegenerate one-dimensional model".into(),
        });
    }
    Ok(())
}

/// Limit variance `R^(0) E int L_t^2` of `X_n(t)` in one dimension.
pub fn limit_variance_d1(model: &CovarianceModel, t: f64) -> Result<f64> {
    require_d1(model)?;
    Ok(model.r_hat_zero() * local_time_energy(t))
}

/// Limit variance of a probe statistic in one dimension.
pub fn limit_probe_variance_d1(model: &CovarianceModel, probe: &FiniteDimProbe) -> Result<f64> {
    require_d1(model)?;
    let total = quadratic_form(probe, |w1, w2| {
        window_term(
            &mut |g| Ok(OracleValue { value: local_time_energy(g.abs()), tolerance: 0.0 }),
            w1,
            w2,
        )
    })?;
    Ok(model.r_hat_zero() * total.value)
}

/// `int (sum_i alpha_i (L_{t_i} - L_{t_{i-1}})(x))^2 dx` for one simulated path,
/// with local times binned at width `sqrt(step)`.
pub fn local_time_quadratic(probe: &FiniteDimProbe, seed: u64) -> Result<f64> {
    let horizon = probe.times()[probe.times().len() - 1];
    let step = 1.0 / LIMIT_STEPS_PER_UNIT;
    let path = sample_path(1, horizon, step, seed)?;
    let width = step.sqrt();
    let (lo, hi) = path
        .points()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));
    let first = (lo / width).floor() as i64;
    let bins = ((hi / width).floor() as i64 - first + 1) as usize;
    let mut occupation = vec![0.0; bins];
    let windows = probe.windows();
    let weights = probe.weights();
    for k in 0..path.steps() {
        let start = path.time(k);
        let cell_end = path.time(k + 1).min(horizon);
        let bin = ((path.point(k)[0] / width).floor() as i64 - first) as usize;
        for ((a, b), alpha) in windows.iter().zip(weights) {
            let overlap = cell_end.min(*b) - start.max(*a);
            if overlap > 0.0 {
                occupation[bin] += alpha * overlap;
            }
        }
    }
    Ok(occupation.iter().map(|m| m * m).sum::<f64>() / width)
}

/// Monte Carlo description of the one-dimensional limit `sqrt(R^(0) Q) N`
/// of a probe statistic, where `Q` is the local-time quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawD1 {
    r_hat_zero: f64,
    quadratics: Vec<f64>,
}

impl LimitLawD1 {
    pub fn simulate(model: &CovarianceModel, probe: &FiniteDimProbe, replicas: usize, seed: u64) -> Result<Self> {
        require_d1(model)?;
        if replicas < 2 {
            return Err(precondition("the limit law needs at least two replicas"));
        }
        let quadratics = (0..replicas as u64)
            .map(|r| local_time_quadratic(probe, crate::rng::derive_seed(seed, &[r])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_quadratics(model.r_hat_zero(), quadratics))
    }

    /// Builds the law from quadratic forms simulated elsewhere.
    pub fn from_quadratics(r_hat_zero: f64, quadratics: Vec<f64>) -> Self {
        Self { r_hat_zero, quadratics }
    }

    pub fn quadratics(&self) -> &[f64] {
        &self.quadratics
    }

    /// `E exp(-theta^2 R^(0) Q / 2)` and its Monte Carlo standard error.
    pub fn cf(&self, theta: f64) -> (f64, f64) {
        let c = 0.5 * theta * theta * self.r_hat_zero;
        let values: Vec<f64> = self.quadratics.iter().map(|q| (-c * q).exp()).collect();
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        (mean, (var / m).sqrt())
    }

    /// Monte Carlo variance `R^(0) E Q`.
    pub fn variance(&self) -> f64 {
        self.r_hat_zero * self.quadratics.iter().sum::<f64>() / self.quadratics.len() as f64
    }

    /// Excess kurtosis `3 Var Q / (E Q)^2` of the mixture and its jackknife SE.
    pub fn excess_kurtosis(&self) -> (f64, f64) {
        jackknife(&self.quadratics, JACKKNIFE_GROUPS, |qs| {
            let m = qs.len() as f64;
            let mean = qs.iter().map(|q| **q).sum::<f64>() / m;
            let second = qs.iter().map(|q| **q * **q).sum::<f64>() / m;
            3.0 * second / (mean * mean) - 3.0
        })
    }
}

/// One draw of the limit of `X_n(t)` in one dimension.
pub fn sample_limit_d1(model: &CovarianceModel, t: f64, seed: u64) -> Result<f64> {
    use rand_distr::{Distribution, StandardNormal};
    require_d1(model)?;
    let probe = FiniteDimProbe::new(vec![t], vec![1.0])?;
    let q = local_time_quadratic(&probe, crate::rng::derive_seed(seed, &[0]))?;
    let mut rng = crate::rng::stream(crate::rng::derive_seed(seed, &[1]));
    let z: f64 = StandardNormal.sample(&mut rng);
    Ok((model.r_hat_zero() * q).sqrt() * z)
}
