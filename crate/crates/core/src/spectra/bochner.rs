//! Frequency scans checking `R^ >= -eps` (Bochner's criterion).

use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{CovarianceModel, ModelKind};
use crate::fft::fft;

/// Samples per support radius in the one-dimensional tabulation.
const SAMPLES_PER_RADIUS: usize = 512;
const PADDING: usize = 8;
/// Radial scan: `k_j = j * pi / (8 rho)` for `j <= RADIAL_POINTS`.
const RADIAL_POINTS: usize = 1024;
const EXTRA_DIRECTIONS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BochnerReport {
    pub min_spectrum: f64,
    pub argmin: Vec<f64>,
    pub tolerance: f64,
    pub frequencies: usize,
    pub passed: bool,
}

pub fn check_bochner(model: &CovarianceModel) -> BochnerReport {
    let tolerance = model.bochner_tolerance();
    let rho = model.support_radius();
    let (min_spectrum, argmin, frequencies) = if rho == 0.0 {
        (0.0, vec![0.0; model.dim()], 1)
    } else if model.dim() == 1 {
        dft_scan(model)
    } else {
        match &model.kind {
            ModelKind::Radial(_) => radial_scan(model),
            _ => direction_scan(model),
        }
    };
    BochnerReport {
        min_spectrum,
        argmin,
        tolerance,
        frequencies,
        passed: min_spectrum >= -tolerance,
    }
}

/// Zero-padded DFT of the tabulated covariance.
///
/// For a compactly supported `R` the sampled transform equals the
/// periodized spectrum, so a covariance yields nonnegative values exactly
/// up to rounding.
fn dft_scan(model: &CovarianceModel) -> (f64, Vec<f64>, usize) {
    let rho = model.support_radius();
    let h = rho / SAMPLES_PER_RADIUS as f64;
    let n = (PADDING * (2 * SAMPLES_PER_RADIUS + 1)).next_power_of_two();
    let mut data = vec![Complex64::new(0.0, 0.0); n];
    for m in -(SAMPLES_PER_RADIUS as i64)..=SAMPLES_PER_RADIUS as i64 {
        let idx = m.rem_euclid(n as i64) as usize;
        data[idx] = Complex64::new(model.evaluate(&[m as f64 * h]), 0.0);
    }
    fft(&mut data, false);
    let mut best = (f64::INFINITY, 0.0);
    for (j, value) in data.iter().enumerate().take(n / 2 + 1) {
        let s = h * value.re;
        if s < best.0 {
            best = (s, 2.0 * core::f64::consts::PI * j as f64 / (n as f64 * h));
        }
    }
    (best.0, vec![best.1], n / 2 + 1)
}

fn radial_scan(model: &CovarianceModel) -> (f64, Vec<f64>, usize) {
    let dk = core::f64::consts::PI / (8.0 * model.support_radius());
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..=RADIAL_POINTS {
        let k = j as f64 * dk;
        let s = model.spectral_radial_mean(k);
        if s < best.0 {
            best = (s, k);
        }
    }
    let mut argmin = vec![0.0; model.dim()];
    argmin[0] = best.1;
    (best.0, argmin, RADIAL_POINTS + 1)
}

fn scan_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for axis in 0..dim {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        dirs.push(e);
    }
    let diag = 1.0 / (dim as f64).sqrt();
    dirs.push(vec![diag; dim]);
    let mut rng = crate::rng::stream(0x00B0_C4E2);
    for _ in 0..EXTRA_DIRECTIONS {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = crate::geometry::norm(&v);
        dirs.push(v.into_iter().map(|c| c / len).collect());
    }
    dirs
}

fn direction_scan(model: &CovarianceModel) -> (f64, Vec<f64>, usize) {
    let dk = core::f64::consts::PI / (8.0 * model.support_radius());
    let dirs = scan_directions(model.dim());
    let mut best = (f64::INFINITY, vec![0.0; model.dim()]);
    let mut count = 0;
    for j in 0..=RADIAL_POINTS {
        let k = j as f64 * dk;
        // The shot-noise atom transform depends only on |xi|.
        let atom = match &model.kind {
            ModelKind::Shot(s) => Some(s.shape.atom_transform(k)),
            _ => None,
        };
        for dir in &dirs {
            let xi: Vec<f64> = dir.iter().map(|c| c * k).collect();
            let s = match (&model.kind, atom) {
                (ModelKind::Shot(shot), Some(a)) => a * a * shot.shape.phase_sum(&xi).norm_sqr(),
                _ => model.spectrum(&xi),
            };
            count += 1;
            if s < best.0 {
                best = (s, xi);
            }
        }
    }
    (best.0, best.1, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::spectra::{build_gaussian_model, shot_noise_model, CovarianceSpec, Profile, ShapeFunction};

    #[test]
    fn triangular_passes() {
        for dim in [1, 2] {
            let model = build_gaussian_model(&CovarianceSpec::TensorTriangular {
                dim,
                variance: 1.0,
                scale: 1.0,
            })
            .unwrap();
            let report = check_bochner(&model);
            assert!(report.passed, "{report:?}");
            assert!(report.min_spectrum >= -1e-12);
        }
    }

    #[test]
    fn shot_noise_passes() {
        let shape = ShapeFunction::unit(2, Profile::Tent).unwrap();
        let report = check_bochner(&shot_noise_model(&shape).unwrap());
        assert!(report.passed && report.min_spectrum >= 0.0, "{report:?}");
    }

    fn oscillating_bump(dim: usize) -> CovarianceSpec {
        // cos(3 pi r) (1 - r): continuous, compact, not positive definite in 2D.
        let radii: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let values: Vec<f64> = radii
            .iter()
            .map(|r| libm::cos(3.0 * core::f64::consts::PI * r) * (1.0 - r))
            .collect();
        CovarianceSpec::Tabulated { dim, radii, values }
    }

    fn flat_top() -> CovarianceSpec {
        // Concave trapezoid: fails Bochner on the line.
        CovarianceSpec::Tabulated {
            dim: 1,
            radii: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 1.0, 0.0],
        }
    }

    #[test]
    fn non_positive_definite_profiles_are_rejected() {
        for spec in [flat_top(), oscillating_bump(2)] {
            match build_gaussian_model(&spec) {
                Err(Error::NotPositiveDefinite { min, tolerance }) => assert!(min < -tolerance),
                other => panic!("expected Bochner rejection, got {other:?}"),
            }
        }
    }

    #[test]
    fn tabulated_triangle_is_accepted() {
        let spec = CovarianceSpec::Tabulated {
            dim: 1,
            radii: vec![0.0, 1.0],
            values: vec![1.0, 0.0],
        };
        assert!(build_gaussian_model(&spec).is_ok());
    }
}
