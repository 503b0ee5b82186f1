//! Shot-noise potential `V_p(x) = sum_i phi(x - y_i) - c_p` over a
//! unit-intensity Poisson point set.
//!
//! Points are generated cell by cell from a seed derived from the cell key,
//! so a window sample and a path-adapted sample with the same seed agree
//! wherever both are defined.

use num_traits::Float;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::functional::Potential;
use crate::geometry::{cell_of, neighbourhood, BoundingBox, CellKey};
use crate::math::MAX_DIM;
use crate::rng::{derive_seed, stream};
use crate::spectra::ShapeFunction;

/// Largest expected number of points in one sample.
pub const MAX_EXPECTED_POINTS: f64 = 1e9;

#[derive(Debug, Clone)]
pub struct PoissonField {
    shape: ShapeFunction,
    cell: f64,
    seed: u64,
    /// Evaluation region of a window sample; `None` for path-adapted samples.
    window: Option<BoundingBox>,
    points: Vec<f64>,
    cells: HashMap<CellKey, (u32, u32)>,
}

fn cell_seed(seed: u64, key: &CellKey, dim: usize) -> u64 {
    let mut parts = [0u64; MAX_DIM];
    for (p, k) in parts.iter_mut().zip(key.iter()).take(dim) {
        *p = *k as u32 as u64;
    }
    derive_seed(seed, &parts[..dim])
}

/// Appends the points of cell `key` to `out` and returns how many were added.
fn generate_cell(seed: u64, key: &CellKey, dim: usize, cell: f64, out: &mut Vec<f64>) -> usize {
    let mut rng = stream(cell_seed(seed, key, dim));
    let volume = libm::pow(cell, dim as f64);
    let count = Poisson::new(volume).expect("cell volume is positive").sample(&mut rng) as usize;
    for _ in 0..count {
        for k in &key[..dim] {
            out.push((*k as f64 + rng.random::<f64>()) * cell);
        }
    }
    count
}

fn check_shape(shape: &ShapeFunction, dim: usize) -> Result<f64> {
    if shape.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            got: dim,
        });
    }
    Ok(shape.support_radius())
}

/// Points in `window` padded by the shape's support radius.
pub fn sample_poisson_field(shape: &ShapeFunction, window: &BoundingBox, seed: u64) -> Result<PoissonField> {
    let dim = window.dim();
    let cell = check_shape(shape, dim)?;
    let padded = window.padded(cell);
    if padded.volume() > MAX_EXPECTED_POINTS {
        return Err(Error::Guard(alloc::format!(
            "window holds {:.3e} expected points, above {MAX_EXPECTED_POINTS:.0e}",
            padded.volume()
        )));
    }
    let lo = cell_of(padded.lo(), cell);
    let hi = cell_of(padded.hi(), cell);
    let mut points = Vec::new();
    let mut cells = HashMap::new();
    let mut key = lo;
    let mut scratch = Vec::new();
    loop {
        scratch.clear();
        generate_cell(seed, &key, dim, cell, &mut scratch);
        let start = points.len() / dim;
        for p in scratch.chunks_exact(dim) {
            if padded.contains(p) {
                points.extend_from_slice(p);
            }
        }
        cells.insert(key, (start as u32, (points.len() / dim) as u32));
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(PoissonField {
                    shape: shape.clone(),
                    cell,
                    seed,
                    window: Some(window.clone()),
                    points,
                    cells,
                });
            }
            if key[axis] < hi[axis] {
                key[axis] += 1;
                break;
            }
            key[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// Materialises exactly the cells within one cell of the path's positions.
pub fn sample_along_path(shape: &ShapeFunction, path: &BrownianPath, seed: u64) -> Result<PoissonField> {
    let dim = path.dim();
    let cell = check_shape(shape, dim)?;
    let visited: HashSet<CellKey> = path.points().map(|p| cell_of(p, cell)).collect();
    let mut needed: Vec<CellKey> = visited
        .iter()
        .flat_map(|key| neighbourhood(key, dim).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    // Insertion order must not depend on hash iteration order.
    needed.sort_unstable();
    let expected = needed.len() as f64 * libm::pow(cell, dim as f64);
    if expected > MAX_EXPECTED_POINTS {
        return Err(Error::Guard(alloc::format!(
            "path neighbourhood holds {expected:.3e} expected points"
        )));
    }
    let mut points = Vec::new();
    let mut cells = HashMap::with_capacity(needed.len());
    for key in needed {
        let start = points.len() / dim;
        let count = generate_cell(seed, &key, dim, cell, &mut points);
        cells.insert(key, (start as u32, (start + count) as u32));
    }
    Ok(PoissonField {
        shape: shape.clone(),
        cell,
        seed,
        window: None,
        points,
        cells,
    })
}

impl PoissonField {
    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn shape(&self) -> &ShapeFunction {
        &self.shape
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn window(&self) -> Option<&BoundingBox> {
        self.window.as_ref()
    }

    pub fn point_count(&self) -> usize {
        self.points.len() / self.dim()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim())
    }

    fn cell_points(&self, key: &CellKey) -> Option<&[f64]> {
        let dim = self.dim();
        self.cells
            .get(key)
            .map(|&(a, b)| &self.points[a as usize * dim..b as usize * dim])
    }

    fn check_region(&self, x: &[f64]) -> Result<CellKey> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(window) = &self.window {
            if !window.contains(x) {
                return Err(Error::OutOfDomain);
            }
        }
        let key = cell_of(x, self.cell);
        if neighbourhood(&key, self.dim()).any(|k| !self.cells.contains_key(&k)) {
            return Err(Error::OutOfDomain);
        }
        Ok(key)
    }

    /// Sum of `phi(x - y)` over `candidates`.
    fn shot_sum(&self, x: &[f64], candidates: &[f64]) -> f64 {
        let dim = self.dim();
        let reach2 = self.cell * self.cell;
        let a = self.shape.atom_radius();
        let a2 = a * a;
        let profile = self.shape.profile();
        let atoms = self.shape.atoms();
        let mut rel = [0.0; MAX_DIM];
        let mut total = 0.0;
        for y in candidates.chunks_exact(dim) {
            let mut d2 = 0.0;
            for axis in 0..dim {
                rel[axis] = x[axis] - y[axis];
                d2 += rel[axis] * rel[axis];
            }
            if d2 >= reach2 {
                continue;
            }
            for atom in atoms {
                let mut e2 = 0.0;
                for (r, c) in rel[..dim].iter().zip(&atom.center) {
                    let e = r - c;
                    e2 += e * e;
                }
                if e2 < a2 {
                    total += atom.weight * profile.value(e2.sqrt() / a);
                }
            }
        }
        total
    }

    /// `V_p(x)` from the points in the 3^d cells around `x`.
    pub fn poisson_value(&self, x: &[f64]) -> Result<f64> {
        let key = self.check_region(x)?;
        let mut total = 0.0;
        for k in neighbourhood(&key, self.dim()) {
            if let Some(pts) = self.cell_points(&k) {
                total += self.shot_sum(x, pts);
            }
        }
        Ok(total - self.shape.mass())
    }

    /// `V_p(x)` summed over every stored point.
    pub fn brute_force_value(&self, x: &[f64]) -> f64 {
        self.shot_sum(x, &self.points) - self.shape.mass()
    }
}

impl Potential for PoissonField {
    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.poisson_value(x)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }

    /// Gathers each visited cell's neighbourhood once and reuses it for
    /// consecutive positions in the same cell.
    fn values_along(&self, path: &BrownianPath, count: usize) -> Result<Vec<f64>> {
        let dim = self.dim();
        let mut gathered: HashMap<CellKey, Vec<f64>> = HashMap::new();
        let mut out = Vec::with_capacity(count);
        let mut last: Option<CellKey> = None;
        for k in 0..count {
            let x = path.point(k);
            let key = cell_of(x, self.cell);
            if last != Some(key) {
                if !gathered.contains_key(&key) {
                    self.check_region(x)?;
                    let mut list = Vec::new();
                    for nb in neighbourhood(&key, dim) {
                        list.extend_from_slice(self.cell_points(&nb).unwrap_or(&[]));
                    }
                    gathered.insert(key, list);
                }
                last = Some(key);
            } else if let Some(window) = &self.window {
                if !window.contains(x) {
                    return Err(Error::OutOfDomain);
                }
            }
            out.push(self.shot_sum(x, &gathered[&key]) - self.shape.mass());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::sample_path;
    use crate::spectra::{shot_noise_model, Profile, ShapeSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tent(dim: usize) -> ShapeFunction {
        ShapeFunction::unit(dim, Profile::Tent).unwrap()
    }

    #[test]
    fn counts_have_poisson_moments() {
        let shape = tent(2);
        let window = BoundingBox::new(alloc::vec![0.0, 0.0], alloc::vec![8.0, 8.0]).unwrap();
        let m = 4000;
        let counts: Vec<f64> = (0..m)
            .map(|s| sample_poisson_field(&shape, &window, s).unwrap().point_count() as f64)
            .collect();
        // Padded window is 10 x 10.
        let mean = counts.iter().sum::<f64>() / m as f64;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (m as f64 - 1.0);
        assert!((mean - 100.0).abs() < 4.0 * (100.0 / m as f64).sqrt(), "mean {mean}");
        // Var of the sample variance of a Poisson(100): (mu + 2 mu^2) / m.
        assert!((var - 100.0).abs() < 4.0 * ((100.0 + 2e4) / m as f64).sqrt(), "var {var}");
    }

    #[test]
    fn window_sample_is_deterministic_and_hash_is_complete() {
        let shape = tent(2);
        let window = BoundingBox::cube(2, 3.0).unwrap();
        let a = sample_poisson_field(&shape, &window, 9).unwrap();
        let b = sample_poisson_field(&shape, &window, 9).unwrap();
        assert_eq!(a.points, b.points);
        for i in 0..50 {
            let x = [-3.0 + 0.12 * i as f64, 2.9 - 0.11 * i as f64];
            assert_relative_eq!(a.poisson_value(&x).unwrap(), a.brute_force_value(&x), epsilon = 1e-12);
        }
        assert!(matches!(a.poisson_value(&[3.5, 0.0]), Err(Error::OutOfDomain)));
    }

    #[test]
    fn path_sample_agrees_with_window_sample() {
        let shape = ShapeFunction::new(ShapeSpec::tent_difference(2, 2.0)).unwrap();
        let path = sample_path(2, 20.0, 0.05, 4).unwrap();
        let lazy = sample_along_path(&shape, &path, 77).unwrap();
        let window = crate::brownian::bounding_box(&path, 0.0);
        let full = sample_poisson_field(&shape, &window, 77).unwrap();
        let a = lazy.values_along(&path, path.len()).unwrap();
        for (k, v) in a.iter().enumerate() {
            assert_relative_eq!(*v, full.poisson_value(path.point(k)).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_and_variance_of_potential() {
        let shape = tent(1);
        let model = shot_noise_model(&shape).unwrap();
        let window = BoundingBox::new(alloc::vec![-0.5], alloc::vec![0.5]).unwrap();
        let m = 100_000;
        let values: Vec<f64> = (0..m)
            .map(|s| sample_poisson_field(&shape, &window, s).unwrap().poisson_value(&[0.0]).unwrap())
            .collect();
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        let fourth = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m as f64;
        assert!(mean.abs() < 4.0 * (var / m as f64).sqrt(), "mean {mean}");
        let var_se = ((fourth - var * var) / m as f64).sqrt();
        assert!((var - model.variance()).abs() < 4.0 * var_se, "var {var} vs {}", model.variance());
    }

    #[test]
    fn independence_beyond_support() {
        let shape = tent(1);
        let window = BoundingBox::new(alloc::vec![0.0], alloc::vec![2.5]).unwrap();
        let m = 40_000;
        let prods: Vec<f64> = (0..m)
            .map(|s| {
                let f = sample_poisson_field(&shape, &window, s).unwrap();
                f.poisson_value(&[0.0]).unwrap() * f.poisson_value(&[2.5]).unwrap()
            })
            .collect();
        let mean = prods.iter().sum::<f64>() / m as f64;
        let var = prods.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        assert!(mean.abs() < 4.0 * (var / m as f64).sqrt());
    }

    #[test]
    fn guard_rejects_huge_windows() {
        let window = BoundingBox::cube(3, 1e4).unwrap();
        assert!(matches!(sample_poisson_field(&tent(3), &window, 0), Err(Error::Guard(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hash_matches_brute_force(seed in any::<u64>(), x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let shape = ShapeFunction::new(ShapeSpec::single(3, Profile::Bump, 0.7)).unwrap();
            let f = sample_poisson_field(&shape, &BoundingBox::cube(3, 2.0).unwrap(), seed).unwrap();
            let p = [x, y, z];
            prop_assert!((f.poisson_value(&p).unwrap() - f.brute_force_value(&p)).abs() < 1e-12);
        }
    }
}
