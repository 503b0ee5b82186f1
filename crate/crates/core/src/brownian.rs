//! Brownian paths on `[0, horizon]`, heat kernels and one-dimensional local times.

use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, BoundingBox};
use crate::rng::stream;

/// Largest number of time steps a path may have.
pub const MAX_STEPS: f64 = 1e9;
/// Steps per correlation length: `step = (length / STEP_RESOLUTION)^2`.
pub const STEP_RESOLUTION: f64 = 10.0;
/// Local-time bins per correlation length.
pub const BINS_PER_LENGTH: f64 = 8.0;

/// Time step resolving a correlation length `length` with `kappa` steps.
pub fn time_step(length: f64, kappa: f64) -> Result<f64> {
    if !(length.is_finite() && length > 0.0 && kappa.is_finite() && kappa > 0.0) {
        return Err(invalid("correlation length and step constant must be positive"));
    }
    let ratio = length / kappa;
    Ok(ratio * ratio)
}

/// Positions `B_{k step}` of a Brownian path, with a shorter last step
/// when `horizon` is not a multiple of `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dim: usize,
    step: f64,
    horizon: f64,
    positions: Vec<f64>,
    seed: u64,
}

pub fn sample_path(dim: usize, horizon: f64, step: f64, seed: u64) -> Result<BrownianPath> {
    check_dim(dim)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid("horizon must be nonnegative"));
    }
    let ratio = horizon / step;
    if ratio > MAX_STEPS {
        return Err(Error::Guard(alloc::format!(
            "{ratio:.3e} steps exceed the limit of {MAX_STEPS:.0e}"
        )));
    }
    let steps = libm::ceil(ratio * (1.0 - 1e-12)) as usize;
    let mut rng = stream(seed);
    let mut positions = vec![0.0; (steps + 1) * dim];
    for k in 0..steps {
        let dt = (horizon - k as f64 * step).min(step);
        let scale = dt.sqrt();
        for axis in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            positions[(k + 1) * dim + axis] = positions[k * dim + axis] + scale * z;
        }
    }
    Ok(BrownianPath {
        dim,
        step,
        horizon,
        positions,
        seed,
    })
}

impl BrownianPath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of stored positions, including `B_0`.
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of time steps.
    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.positions.chunks_exact(self.dim)
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 * self.step).min(self.horizon)
    }

    /// Length of the time cell `[time(k), time(k + 1))` inside `[0, t)`.
    pub fn weight(&self, k: usize, t: f64) -> f64 {
        let start = k as f64 * self.step;
        let end = ((k + 1) as f64 * self.step).min(self.horizon).min(t);
        (end - start).max(0.0)
    }

    /// The same path with every position multiplied by `factor` and time by `factor^2`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            step: self.step * factor * factor,
            horizon: self.horizon * factor * factor,
            positions: self.positions.iter().map(|x| x * factor).collect(),
            seed: self.seed,
        }
    }

    pub fn endpoint(&self) -> &[f64] {
        self.point(self.len() - 1)
    }
}

/// Componentwise hull of the path, grown by `pad`.
pub fn bounding_box(path: &BrownianPath, pad: f64) -> BoundingBox {
    let dim = path.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in path.points() {
        for axis in 0..dim {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    BoundingBox::new(lo, hi)
        .expect("path hull is a valid box")
        .padded(pad.max(0.0))
}

/// Gaussian density `q_t(x)` of `N(0, t I_d)`.
pub fn heat_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("heat kernel time must be positive"));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(libm::pow(2.0 * core::f64::consts::PI * t, -d / 2.0) * libm::exp(-r2 / (2.0 * t)))
}

/// Binned occupation density of a one-dimensional path up to time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    bin_width: f64,
    /// Index of the first bin; bin `j` covers `[j w, (j + 1) w)`.
    first_bin: i64,
    values: Vec<f64>,
    time: f64,
}

impl LocalTimeProfile {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_bin(&self) -> i64 {
        self.first_bin
    }

    pub fn bin_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |j| (self.first_bin + j as i64) as f64 * self.bin_width + 0.5 * self.bin_width)
    }

    /// `sum_j L(x_j) w`, equal to the elapsed time.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width
    }

    /// `int L(x)^2 dx` for the binned profile.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.bin_width
    }

    /// `int L(x) M(x) dx` over the common bins of two profiles of equal width.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.bin_width, other.bin_width);
        let lo = self.first_bin.max(other.first_bin);
        let hi = (self.first_bin + self.values.len() as i64).min(other.first_bin + other.values.len() as i64);
        (lo..hi)
            .map(|j| self.values[(j - self.first_bin) as usize] * other.values[(j - other.first_bin) as usize])
            .sum::<f64>()
            * self.bin_width
    }

    /// Profile of the occupation between `earlier.time()` and `self.time()`.
    pub fn difference(&self, earlier: &Self) -> Self {
        let lo = self.first_bin.min(earlier.first_bin);
        let hi = (self.first_bin + self.values.len() as i64).max(earlier.first_bin + earlier.values.len() as i64);
        let at = |p: &Self, j: i64| {
            let idx = j - p.first_bin;
            if idx >= 0 && (idx as usize) < p.values.len() {
                p.values[idx as usize]
            } else {
                0.0
            }
        };
        Self {
            bin_width: self.bin_width,
            first_bin: lo,
            values: (lo..hi).map(|j| at(self, j) - at(earlier, j)).collect(),
            time: self.time - earlier.time,
        }
    }
}

/// Occupation density `L_t(x_j)`: each time cell `[k step, (k+1) step) ∩ [0, t)`
/// is charged to the bin holding `B_{k step}`.
pub fn local_time(path: &BrownianPath, t: f64, bin_width: f64) -> Result<LocalTimeProfile> {
    if path.dim() != 1 {
        return Err(Error::InvalidMode {
            dim: path.dim(),
            reason: "local time exists only in one dimension".into(),
        });
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(invalid("bin width must be positive"));
    }
    if !(t >= 0.0 && t <= path.horizon() * (1.0 + 1e-12)) {
        return Err(invalid("local time requested beyond the path horizon"));
    }
    let mut cells: Vec<(i64, f64)> = Vec::new();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for k in 0..path.steps() {
        let weight = path.weight(k, t);
        if weight <= 0.0 {
            break;
        }
        let bin = libm::floor(path.point(k)[0] / bin_width) as i64;
        lo = lo.min(bin);
        hi = hi.max(bin);
        cells.push((bin, weight));
    }
    if cells.is_empty() {
        return Ok(LocalTimeProfile {
            bin_width,
            first_bin: 0,
            values: Vec::new(),
            time: 0.0,
        });
    }
    let mut values = vec![0.0; (hi - lo + 1) as usize];
    for (bin, weight) in cells {
        values[(bin - lo) as usize] += weight / bin_width;
    }
    Ok(LocalTimeProfile {
        bin_width,
        first_bin: lo,
        values,
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn path_starts_at_origin_and_is_reproducible() {
        let a = sample_path(2, 10.0, 0.01, 42).unwrap();
        let b = sample_path(2, 10.0, 0.01, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.point(0), &[0.0, 0.0]);
        assert_eq!(a.steps(), 1000);
        assert_ne!(a, sample_path(2, 10.0, 0.01, 43).unwrap());
    }

    #[test]
    fn partial_last_step() {
        let p = sample_path(1, 1.05, 0.1, 1).unwrap();
        assert_eq!(p.steps(), 11);
        assert_relative_eq!(p.weight(10, 2.0), 0.05, epsilon = 1e-12);
        let total: f64 = (0..p.steps()).map(|k| p.weight(k, p.horizon())).sum();
        assert_relative_eq!(total, 1.05, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_variance_matches_horizon() {
        let m = 4000;
        let horizon = 3.0;
        let ends: Vec<f64> = (0..m)
            .map(|s| sample_path(1, horizon, 0.5, s).unwrap().endpoint()[0])
            .collect();
        let var = ends.iter().map(|x| x * x).sum::<f64>() / m as f64;
        // SE of a variance estimate under normality: sqrt(2/m) var.
        assert!((var - horizon).abs() < 4.0 * (2.0 / m as f64).sqrt() * horizon);
    }

    #[test]
    fn guard_rejects_huge_paths() {
        assert!(matches!(sample_path(1, 1e10, 1e-2, 0), Err(Error::Guard(_))));
    }

    #[test]
    fn heat_kernel_values() {
        assert_relative_eq!(heat_kernel(1.0, &[0.0]).unwrap(), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert!(heat_kernel(0.0, &[0.0]).is_err());
        let gl = crate::math::GaussLegendre::new(64);
        let mass = gl.integrate_panels(-20.0, 20.0, 40, |x| heat_kernel(2.0, &[x]).unwrap());
        assert_relative_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn bounding_box_of_zero_path() {
        let p = sample_path(2, 0.0, 0.1, 0).unwrap();
        let b = bounding_box(&p, 0.5);
        assert_eq!(b.lo(), &[-0.5, -0.5]);
        assert_eq!(b.hi(), &[0.5, 0.5]);
    }

    #[test]
    fn local_time_rejects_higher_dimensions() {
        let p = sample_path(2, 1.0, 0.1, 0).unwrap();
        assert!(matches!(local_time(&p, 1.0, 0.1), Err(Error::InvalidMode { .. })));
    }

    #[test]
    fn local_time_difference_is_occupation_increment() {
        let p = sample_path(1, 2.0, 1e-3, 9).unwrap();
        let a = local_time(&p, 0.7, 0.05).unwrap();
        let b = local_time(&p, 2.0, 0.05).unwrap();
        let diff = b.difference(&a);
        assert_relative_eq!(diff.total_mass(), 1.3, epsilon = 1e-9);
        assert!(diff.values().iter().all(|v| *v >= -1e-12));
        assert_relative_eq!(b.inner(&b), b.energy(), max_relative = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn occupation_identity(seed in any::<u64>(), t in 0.01f64..1.0, width in 0.005f64..0.5) {
            let p = sample_path(1, 1.0, 1e-3, seed).unwrap();
            let profile = local_time(&p, t, width).unwrap();
            prop_assert!((profile.total_mass() - t).abs() < 1e-10);
            prop_assert!(profile.values().iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn hull_contains_path(seed in any::<u64>(), pad in 0.0f64..1.0) {
            let p = sample_path(3, 2.0, 0.05, seed).unwrap();
            let b = bounding_box(&p, pad);
            prop_assert!(p.points().all(|x| b.contains(x)));
        }
    }
}
