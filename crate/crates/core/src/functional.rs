//! The rescaled occupation functional and its conditional variance.

use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::brownian::BrownianPath;
use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{cell_of, neighbourhood, CellKey};
use crate::math::MAX_DIM;
use crate::spectra::CovarianceModel;

/// Growth regime of the normalisation `a(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScalingMode {
    Nondegenerate,
    Degenerate,
}

/// `a(n)`: `n^{3/4}` (d = 1), `sqrt(n ln n)` (d = 2), `sqrt(n)` (d >= 3 or degenerate).
pub fn scaling_factor(n: f64, dim: usize, mode: ScalingMode) -> Result<f64> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("scale n = {n} must be at least 2")));
    }
    crate::geometry::check_dim(dim)?;
    Ok(match (mode, dim) {
        (ScalingMode::Degenerate, d) if d >= 3 => {
            return Err(Error::InvalidMode {
                dim,
                reason: "the degenerate mode exists only for d = 1, 2".into(),
            })
        }
        (ScalingMode::Degenerate, _) => n.sqrt(),
        (ScalingMode::Nondegenerate, 1) => libm::pow(n, 0.75),
        (ScalingMode::Nondegenerate, 2) => (n * libm::log(n)).sqrt(),
        (ScalingMode::Nondegenerate, _) => n.sqrt(),
    })
}

/// A scenery that can be read along a path.
pub trait Potential {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Seed the scenery was drawn from, if any.
    fn seed(&self) -> Option<u64> {
        None
    }

    /// `V(B_k)` for the first `count` positions of `path`.
    fn values_along(&self, path: &BrownianPath, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|k| self.value(path.point(k))).collect()
    }
}

/// `X_n(t_k)` on a time grid, with the provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n: f64,
    pub dim: usize,
    pub mode: ScalingMode,
    pub scaling: f64,
    pub path_seed: u64,
    pub scenery_seed: Option<u64>,
}

impl FunctionalTrajectory {
    /// Values under a different normalisation `a(n) -> scaling`.
    pub fn rescaled_values(&self, scaling: f64) -> Vec<f64> {
        self.values.iter().map(|v| v * self.scaling / scaling).collect()
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if times.iter().any(|t| !(0.0..=1.0).contains(t)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("time grid must be strictly increasing inside [0, 1]"));
    }
    Ok(())
}

fn check_horizon(path: &BrownianPath, end: f64) -> Result<()> {
    if path.horizon() < end * (1.0 - 1e-12) {
        return Err(precondition(alloc::format!(
            "path horizon {} is shorter than n t = {end}",
            path.horizon()
        )));
    }
    Ok(())
}

/// Number of path positions whose time cell meets `[0, end)`.
fn active_points(path: &BrownianPath, end: f64) -> usize {
    (0..path.steps()).take_while(|&k| path.weight(k, end) > 0.0).count()
}

/// `X_n(t) = a(n)^{-1} int_0^{nt} V(B_s) ds` by the left-endpoint rule on the
/// path's time cells, accumulated in one pass.
pub fn evaluate_functional<P: Potential + ?Sized>(
    potential: &P,
    path: &BrownianPath,
    n: f64,
    times: &[f64],
    mode: ScalingMode,
) -> Result<FunctionalTrajectory> {
    if potential.dim() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: path.dim(),
            got: potential.dim(),
        });
    }
    check_grid(times)?;
    let scaling = scaling_factor(n, path.dim(), mode)?;
    let end = n * times[times.len() - 1];
    check_horizon(path, end)?;
    let count = active_points(path, end);
    let potential_values = potential.values_along(path, count)?;
    let mut values = Vec::with_capacity(times.len());
    let mut prefix = 0.0;
    let mut k = 0;
    for &t in times {
        let target = n * t;
        while k < count && path.weight(k, f64::INFINITY) <= path.weight(k, target) {
            prefix += potential_values[k] * path.weight(k, f64::INFINITY);
            k += 1;
        }
        let partial = if k < count {
            potential_values[k] * path.weight(k, target)
        } else {
            0.0
        };
        values.push((prefix + partial) / scaling);
    }
    Ok(FunctionalTrajectory {
        times: times.to_vec(),
        values,
        n,
        dim: path.dim(),
        mode,
        scaling,
        path_seed: path.seed(),
        scenery_seed: potential.seed(),
    })
}

/// Conditional Gram matrix of the window increments given the path:
/// `G_ij = a(n)^{-2} sum_{s in W_i, u in W_j} R(B_s - B_u) w_s w_u`, row-major.
///
/// Pairs farther apart than the support radius are skipped through a spatial
/// hash, which is exact for compactly supported covariances.
pub fn conditional_gram(
    path: &BrownianPath,
    model: &CovarianceModel,
    n: f64,
    windows: &[(f64, f64)],
    mode: ScalingMode,
) -> Result<Vec<f64>> {
    let dim = path.dim();
    if model.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: model.dim(),
        });
    }
    if windows.is_empty() || windows.iter().any(|(a, b)| !(0.0 <= *a && a < b && *b <= 1.0)) {
        return Err(invalid("windows must be nonempty subintervals of [0, 1]"));
    }
    let scaling = scaling_factor(n, dim, mode)?;
    let end = n * windows.iter().map(|w| w.1).fold(0.0, f64::max);
    check_horizon(path, end)?;
    let w = windows.len();
    let mut gram = vec![0.0; w * w];
    let rho = model.support_radius();
    if rho == 0.0 || model.variance() == 0.0 {
        return Ok(gram);
    }

    // Each position carries its time-cell overlap with every window.
    let count = active_points(path, end);
    let mut points: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for k in 0..count {
        let row: Vec<f64> = windows
            .iter()
            .map(|&(a, b)| path.weight(k, n * b) - path.weight(k, n * a))
            .collect();
        if row.iter().any(|v| *v != 0.0) {
            points.push(k);
            weights.extend(row);
        }
    }
    let mut buckets: HashMap<CellKey, Vec<u32>> = HashMap::new();
    for (i, &k) in points.iter().enumerate() {
        buckets.entry(cell_of(path.point(k), rho)).or_default().push(i as u32);
    }
    let rho2 = rho * rho;
    let r0 = model.variance();
    let mut diff = [0.0; MAX_DIM];
    for (i, &k) in points.iter().enumerate() {
        let x = path.point(k);
        let wi = &weights[i * w..(i + 1) * w];
        for a in 0..w {
            for b in 0..w {
                gram[a * w + b] += r0 * wi[a] * wi[b];
            }
        }
        for key in neighbourhood(&cell_of(x, rho), dim) {
            let Some(bucket) = buckets.get(&key) else { continue };
            for &j in bucket {
                let j = j as usize;
                if j <= i {
                    continue;
                }
                let y = path.point(points[j]);
                let mut d2 = 0.0;
                for axis in 0..dim {
                    diff[axis] = x[axis] - y[axis];
                    d2 += diff[axis] * diff[axis];
                }
                if d2 > rho2 {
                    continue;
                }
                let r = model.evaluate(&diff[..dim]);
                if r == 0.0 {
                    continue;
                }
                let wj = &weights[j * w..(j + 1) * w];
                for a in 0..w {
                    for b in 0..w {
                        gram[a * w + b] += r * (wi[a] * wj[b] + wj[a] * wi[b]);
                    }
                }
            }
        }
    }
    let norm = scaling * scaling;
    gram.iter_mut().for_each(|g| *g /= norm);
    Ok(gram)
}

/// Off-diagonal entry of [`conditional_gram`] for two disjoint windows,
/// `a(n)^{-2} sum_{s in first, u in second} R(B_s - B_u) w_s w_u`.
///
/// Only the second window is hashed, so this is much cheaper than the full
/// Gram matrix when the windows are long.
pub fn conditional_cross(
    path: &BrownianPath,
    model: &CovarianceModel,
    n: f64,
    first: (f64, f64),
    second: (f64, f64),
    mode: ScalingMode,
) -> Result<f64> {
    let dim = path.dim();
    if model.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: model.dim(),
        });
    }
    for (a, b) in [first, second] {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(invalid("windows must be nonempty subintervals of [0, 1]"));
        }
    }
    if first.0 < second.1 && second.0 < first.1 {
        return Err(precondition("cross terms need disjoint windows"));
    }
    let scaling = scaling_factor(n, dim, mode)?;
    let end = n * first.1.max(second.1);
    check_horizon(path, end)?;
    let rho = model.support_radius();
    if rho == 0.0 || model.variance() == 0.0 {
        return Ok(0.0);
    }
    let count = active_points(path, end);
    let overlap = |k: usize, (a, b): (f64, f64)| path.weight(k, n * b) - path.weight(k, n * a);

    // Bucket entries are `dim` coordinates followed by the weight.
    let mut buckets: HashMap<CellKey, Vec<f64>> = HashMap::new();
    for k in 0..count {
        let w = overlap(k, second);
        if w > 0.0 {
            let x = path.point(k);
            let bucket = buckets.entry(cell_of(x, rho)).or_default();
            bucket.extend_from_slice(x);
            bucket.push(w);
        }
    }
    let rho2 = rho * rho;
    let mut diff = [0.0; MAX_DIM];
    let mut total = 0.0;
    for k in 0..count {
        let wk = overlap(k, first);
        if wk <= 0.0 {
            continue;
        }
        let x = path.point(k);
        let mut local = 0.0;
        for key in neighbourhood(&cell_of(x, rho), dim) {
            let Some(bucket) = buckets.get(&key) else { continue };
            for entry in bucket.chunks_exact(dim + 1) {
                let mut d2 = 0.0;
                for axis in 0..dim {
                    diff[axis] = x[axis] - entry[axis];
                    d2 += diff[axis] * diff[axis];
                }
                if d2 <= rho2 {
                    local += model.evaluate(&diff[..dim]) * entry[dim];
                }
            }
        }
        total += wk * local;
    }
    Ok(total / (scaling * scaling))
}

/// `V_n(t) = a(n)^{-2} int_0^{nt} int_0^{nt} R(B_s - B_u) ds du` given the path.
pub fn conditional_variance(
    path: &BrownianPath,
    model: &CovarianceModel,
    n: f64,
    t: f64,
    mode: ScalingMode,
) -> Result<f64> {
    Ok(conditional_gram(path, model, n, &[(0.0, t)], mode)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;
    use crate::spectra::{build_gaussian_model, CovarianceSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cross_term_matches_gram_entry() {
        let model = build_gaussian_model(&CovarianceSpec::TensorTriangular { dim: 2, variance: 1.0, scale: 1.0 }).unwrap();
        let n = 64.0;
        let path = sample_path(2, n, 0.01, 17).unwrap();
        let windows = [(0.0, 0.4), (0.4, 1.0)];
        let gram = conditional_gram(&path, &model, n, &windows, ScalingMode::Nondegenerate).unwrap();
        let cross = conditional_cross(&path, &model, n, windows[0], windows[1], ScalingMode::Nondegenerate).unwrap();
        assert_relative_eq!(cross, gram[1], max_relative = 1e-10);
        assert!(matches!(
            conditional_cross(&path, &model, n, (0.0, 0.5), (0.25, 1.0), ScalingMode::Nondegenerate),
            Err(Error::Precondition(_))
        ));
    }

    struct Field<F: Fn(&[f64]) -> f64>(usize, F);

    impl<F: Fn(&[f64]) -> f64> Potential for Field<F> {
        fn dim(&self) -> usize {
            self.0
        }

        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok((self.1)(x))
        }
    }

    fn grid() -> Vec<f64> {
        (0..=16).map(|k| k as f64 / 16.0).collect()
    }

    #[test]
    fn scaling_factor_examples() {
        assert_relative_eq!(scaling_factor(4096.0, 1, ScalingMode::Nondegenerate).unwrap(), 512.0, max_relative = 1e-14);
        assert_relative_eq!(scaling_factor(4096.0, 2, ScalingMode::Nondegenerate).unwrap(), 184.579_441_484_913, max_relative = 1e-12);
        assert_relative_eq!(scaling_factor(4096.0, 3, ScalingMode::Nondegenerate).unwrap(), 64.0, max_relative = 1e-14);
        assert_relative_eq!(scaling_factor(4096.0, 2, ScalingMode::Degenerate).unwrap(), 64.0, max_relative = 1e-14);
        assert!(matches!(scaling_factor(4096.0, 3, ScalingMode::Degenerate), Err(Error::InvalidMode { .. })));
        assert!(scaling_factor(1.0, 1, ScalingMode::Nondegenerate).is_err());
    }

    #[test]
    fn zero_potential_gives_zero_trajectory() {
        let path = sample_path(2, 64.0, 0.01, 3).unwrap();
        let traj = evaluate_functional(&Field(2, |_| 0.0), &path, 64.0, &grid(), ScalingMode::Nondegenerate).unwrap();
        assert!(traj.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_potential_integrates_time() {
        let path = sample_path(1, 100.0, 0.03, 3).unwrap();
        let traj = evaluate_functional(&Field(1, |_| 1.0), &path, 100.0, &grid(), ScalingMode::Degenerate).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.values) {
            assert_relative_eq!(*x, 100.0 * t / 10.0, epsilon = 1e-10);
        }
        assert_eq!(traj.values[0], 0.0);
    }

    #[test]
    fn horizon_precondition() {
        let path = sample_path(1, 10.0, 0.1, 3).unwrap();
        assert!(matches!(
            evaluate_functional(&Field(1, |_| 1.0), &path, 20.0, &grid(), ScalingMode::Nondegenerate),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn gram_matches_brute_force() {
        let model = build_gaussian_model(&CovarianceSpec::TensorTriangular { dim: 2, variance: 1.5, scale: 1.0 }).unwrap();
        let path = sample_path(2, 30.0, 0.05, 11).unwrap();
        let windows = [(0.0, 0.37), (0.37, 1.0)];
        let gram = conditional_gram(&path, &model, 30.0, &windows, ScalingMode::Nondegenerate).unwrap();
        let scaling = scaling_factor(30.0, 2, ScalingMode::Nondegenerate).unwrap();
        let mut brute = [0.0; 4];
        for j in 0..path.steps() {
            for k in 0..path.steps() {
                let diff: Vec<f64> = path.point(j).iter().zip(path.point(k)).map(|(a, b)| a - b).collect();
                let r = model.evaluate(&diff);
                for (a, wa) in windows.iter().enumerate() {
                    for (b, wb) in windows.iter().enumerate() {
                        let wj = path.weight(j, 30.0 * wa.1) - path.weight(j, 30.0 * wa.0);
                        let wk = path.weight(k, 30.0 * wb.1) - path.weight(k, 30.0 * wb.0);
                        brute[a * 2 + b] += r * wj * wk;
                    }
                }
            }
        }
        for (g, b) in gram.iter().zip(brute) {
            assert_relative_eq!(*g, b / (scaling * scaling), max_relative = 1e-12);
        }
        assert_relative_eq!(gram[1], gram[2], max_relative = 1e-14);
        let total = conditional_variance(&path, &model, 30.0, 1.0, ScalingMode::Nondegenerate).unwrap();
        assert_relative_eq!(total, gram.iter().sum::<f64>(), max_relative = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn functional_is_linear_in_potential(seed in any::<u64>(), c in -5.0f64..5.0) {
            let path = sample_path(1, 50.0, 0.02, seed).unwrap();
            let base = Field(1, |x: &[f64]| libm::sin(3.0 * x[0]));
            let scaled = Field(1, move |x: &[f64]| c * libm::sin(3.0 * x[0]));
            let a = evaluate_functional(&base, &path, 50.0, &grid(), ScalingMode::Nondegenerate).unwrap();
            let b = evaluate_functional(&scaled, &path, 50.0, &grid(), ScalingMode::Nondegenerate).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((c * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
