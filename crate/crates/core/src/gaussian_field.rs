//! Stationary Gaussian sceneries: exact grid synthesis by circulant embedding
//! and a mesh-free random-feature evaluator.

use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::fft::fft_nd;
use crate::functional::Potential;
use crate::geometry::BoundingBox;
use crate::math::sphere_area;
use crate::rng::{stream, StreamRng};
use crate::spectra::{CovarianceModel, ModelKind};

/// Largest circulant embedding, in cells.
pub const MAX_GRID_CELLS: u128 = 1 << 30;
/// Largest clamped share of the circulant spectrum that still counts as exact.
pub const MAX_CLAMPED_FRACTION: f64 = 1e-6;
/// Padding doublings tried after the first embedding.
pub const EMBEDDING_RETRIES: usize = 3;
/// Grid nodes per support radius by default.
pub const NODES_PER_RADIUS: f64 = 16.0;
/// Fewest features accepted by the feature sampler.
pub const MIN_FEATURES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingDiagnostics {
    pub clamped_fraction: f64,
    pub padding: f64,
    pub embedding_shape: Vec<usize>,
    pub retries: usize,
}

/// A sampled grid with multilinear interpolation between nodes.
#[derive(Debug, Clone)]
pub struct GaussianField {
    window: BoundingBox,
    spacing: f64,
    shape: Vec<usize>,
    values: Vec<f64>,
    seed: u64,
    diagnostics: EmbeddingDiagnostics,
}

/// Default grid spacing for `model`.
pub fn default_spacing(model: &CovarianceModel) -> f64 {
    model.support_radius() / NODES_PER_RADIUS
}

/// Samples the field on the nodes `window.lo + h k` covering `window`.
pub fn sample_grid_field(
    model: &CovarianceModel,
    window: &BoundingBox,
    spacing: f64,
    seed: u64,
) -> Result<GaussianField> {
    let dim = model.dim();
    if window.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: window.dim(),
        });
    }
    let rho = model.support_radius();
    if !(spacing.is_finite() && spacing > 0.0 && spacing <= rho / 8.0 * (1.0 + 1e-12)) {
        return Err(invalid("grid spacing must be positive and at most support_radius / 8"));
    }
    let shape: Vec<usize> = (0..dim)
        .map(|axis| libm::ceil(window.extent(axis) / spacing * (1.0 - 1e-12)) as usize + 1)
        .collect();
    let base_pad = libm::ceil(rho / spacing) as usize;
    let mut last_fraction = 0.0;
    for retry in 0..=EMBEDDING_RETRIES {
        let pad = base_pad << retry;
        let embed: Vec<usize> = shape.iter().map(|n| (n + pad).next_power_of_two()).collect();
        let cells: u128 = embed.iter().map(|m| *m as u128).product();
        if cells > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge { cells });
        }
        let (eigen, fraction) = circulant_eigenvalues(model, &embed, spacing);
        last_fraction = fraction;
        if fraction >= MAX_CLAMPED_FRACTION {
            continue;
        }
        let mut rng = stream(seed);
        let values = synthesize(&eigen, &embed, &shape, &mut rng);
        return Ok(GaussianField {
            window: window.clone(),
            spacing,
            shape,
            values,
            seed,
            diagnostics: EmbeddingDiagnostics {
                clamped_fraction: fraction,
                padding: pad as f64 * spacing,
                embedding_shape: embed,
                retries: retry,
            },
        });
    }
    Err(Error::Embedding(last_fraction))
}

/// Eigenvalues of the periodised covariance, clamped at zero, and the clamped share.
fn circulant_eigenvalues(model: &CovarianceModel, embed: &[usize], spacing: f64) -> (Vec<f64>, f64) {
    let dim = embed.len();
    let total: usize = embed.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut lag = vec![0.0; dim];
    let rho2 = model.support_radius() * model.support_radius();
    for (flat, slot) in data.iter_mut().enumerate() {
        let mut rest = flat;
        let mut r2 = 0.0;
        for axis in (0..dim).rev() {
            let m = embed[axis];
            let j = rest % m;
            rest /= m;
            lag[axis] = j.min(m - j) as f64 * spacing;
            r2 += lag[axis] * lag[axis];
        }
        if r2 <= rho2 {
            *slot = Complex64::new(model.evaluate(&lag), 0.0);
        }
    }
    fft_nd(&mut data, embed, false);
    let mut negative = 0.0;
    let mut absolute = 0.0;
    let eigen = data
        .iter()
        .map(|z| {
            absolute += z.re.abs();
            if z.re < 0.0 {
                negative -= z.re;
                0.0
            } else {
                z.re
            }
        })
        .collect();
    let fraction = if absolute > 0.0 { negative / absolute } else { 0.0 };
    (eigen, fraction)
}

fn synthesize(eigen: &[f64], embed: &[usize], shape: &[usize], rng: &mut StreamRng) -> Vec<f64> {
    let total = eigen.len();
    let mut data: Vec<Complex64> = eigen
        .iter()
        .map(|lambda| {
            let scale = (lambda / total as f64).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    fft_nd(&mut data, embed, false);
    let dim = shape.len();
    let count: usize = shape.iter().product();
    let mut values = Vec::with_capacity(count);
    let mut index = vec![0usize; dim];
    for _ in 0..count {
        let mut flat = 0;
        for axis in 0..dim {
            flat = flat * embed[axis] + index[axis];
        }
        values.push(data[flat].re);
        for axis in (0..dim).rev() {
            index[axis] += 1;
            if index[axis] < shape[axis] {
                break;
            }
            index[axis] = 0;
        }
    }
    values
}

impl GaussianField {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn window(&self) -> &BoundingBox {
        &self.window
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn diagnostics(&self) -> &EmbeddingDiagnostics {
        &self.diagnostics
    }

    /// Node value by multi-index.
    pub fn node(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (axis, i) in index.iter().enumerate() {
            flat = flat * self.shape[axis] + i;
        }
        self.values[flat]
    }

    /// Node coordinates and values in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let dim = self.dim();
        (0..self.values.len()).map(move |flat| {
            let mut rest = flat;
            let mut x = vec![0.0; dim];
            for axis in (0..dim).rev() {
                let i = rest % self.shape[axis];
                rest /= self.shape[axis];
                x[axis] = self.window.lo()[axis] + i as f64 * self.spacing;
            }
            (x, self.values[flat])
        })
    }

    /// Multilinear interpolation of the node values.
    pub fn field_value(&self, x: &[f64]) -> Result<f64> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let mut base = [0usize; crate::math::MAX_DIM];
        let mut frac = [0.0; crate::math::MAX_DIM];
        for axis in 0..dim {
            let u = (x[axis] - self.window.lo()[axis]) / self.spacing;
            let last = (self.shape[axis] - 1) as f64;
            if !(u >= -1e-9 && u <= last + 1e-9) {
                return Err(Error::OutOfDomain);
            }
            let u = u.clamp(0.0, last);
            let i = (libm::floor(u) as usize).min(self.shape[axis].saturating_sub(2));
            base[axis] = i;
            frac[axis] = u - i as f64;
        }
        if self.values.len() == 1 {
            return Ok(self.values[0]);
        }
        let mut total = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut flat = 0;
            for axis in 0..dim {
                let up = (corner >> (dim - 1 - axis)) & 1;
                let i = (base[axis] + up).min(self.shape[axis] - 1);
                weight *= if up == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * self.shape[axis] + i;
            }
            if weight != 0.0 {
                total += weight * self.values[flat];
            }
        }
        Ok(total)
    }
}

impl Potential for GaussianField {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.field_value(x)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }

    fn values_along(&self, path: &crate::brownian::BrownianPath, count: usize) -> Result<Vec<f64>> {
        if self.shape.len() != 1 || self.values.len() < 2 {
            return (0..count).map(|k| self.field_value(path.point(k))).collect();
        }
        // One-dimensional paths dominate the step count; interpolate inline.
        let lo = self.window.lo()[0];
        let last = (self.values.len() - 1) as f64;
        let inv = 1.0 / self.spacing;
        (0..count)
            .map(|k| {
                let u = (path.point(k)[0] - lo) * inv;
                if !(u >= -1e-9 && u <= last + 1e-9) {
                    return Err(Error::OutOfDomain);
                }
                let u = u.clamp(0.0, last);
                let i = (u as usize).min(self.values.len() - 2);
                let frac = u - i as f64;
                Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
            })
            .collect()
    }
}

/// Draws frequencies from `R^(xi) / ((2 pi)^d R(0))`.
#[derive(Debug, Clone)]
pub struct FeatureSampler {
    dim: usize,
    variance: f64,
    law: FrequencyLaw,
}

#[derive(Debug, Clone)]
enum FrequencyLaw {
    /// Independent axes with density `L sinc^2(L k / 2) / (2 pi)`.
    Tensor { scale: f64 },
    /// Isotropic: tabulated inverse CDF of `|xi|`, uniform direction.
    Radial { radii: Vec<f64>, cdf: Vec<f64>, captured: f64 },
}

/// Radial frequency table size.
const RADIAL_TABLE: usize = 8192;
/// Cutoff of the radial table in units of `pi / support_radius`.
const RADIAL_CUTOFF: f64 = 512.0;

impl FeatureSampler {
    pub fn new(model: &CovarianceModel) -> Result<Self> {
        let variance = model.variance();
        if !(variance > 0.0) {
            return Err(invalid("feature sampler needs R(0) > 0"));
        }
        let dim = model.dim();
        let law = match &model.kind {
            ModelKind::Tensor(t) => FrequencyLaw::Tensor { scale: t.scale },
            ModelKind::Radial(_) => {
                let kmax = RADIAL_CUTOFF * core::f64::consts::PI / model.support_radius();
                let dk = kmax / RADIAL_TABLE as f64;
                let norm = sphere_area(dim) / (libm::pow(2.0 * core::f64::consts::PI, dim as f64) * variance);
                let density: Vec<f64> = (0..=RADIAL_TABLE)
                    .map(|j| {
                        let k = j as f64 * dk;
                        norm * model.spectral_radial_mean(k).max(0.0) * k.powi(dim as i32 - 1)
                    })
                    .collect();
                let mut cdf = vec![0.0; RADIAL_TABLE + 1];
                for j in 1..=RADIAL_TABLE {
                    cdf[j] = cdf[j - 1] + 0.5 * dk * (density[j - 1] + density[j]);
                }
                let captured = cdf[RADIAL_TABLE];
                cdf.iter_mut().for_each(|c| *c /= captured);
                FrequencyLaw::Radial {
                    radii: (0..=RADIAL_TABLE).map(|j| j as f64 * dk).collect(),
                    cdf,
                    captured,
                }
            }
            ModelKind::Shot(_) => {
                return Err(invalid("feature sampler supports Gaussian covariance models only"));
            }
        };
        Ok(Self { dim, variance, law })
    }

    /// Spectral mass covered by the radial table (1 for separable models).
    pub fn captured_mass(&self) -> f64 {
        match &self.law {
            FrequencyLaw::Tensor { .. } => 1.0,
            FrequencyLaw::Radial { captured, .. } => *captured,
        }
    }

    fn frequency(&self, rng: &mut StreamRng, out: &mut Vec<f64>) {
        match &self.law {
            FrequencyLaw::Tensor { scale } => {
                for _ in 0..self.dim {
                    out.push(2.0 * sinc_squared_variate(rng) / scale);
                }
            }
            FrequencyLaw::Radial { radii, cdf, .. } => {
                let u: f64 = rng.random();
                let j = cdf.partition_point(|c| *c < u).clamp(1, cdf.len() - 1);
                let span = cdf[j] - cdf[j - 1];
                let t = if span > 0.0 { (u - cdf[j - 1]) / span } else { 0.0 };
                let k = radii[j - 1] + t * (radii[j] - radii[j - 1]);
                let start = out.len();
                let mut len2 = 0.0;
                for _ in 0..self.dim {
                    let z: f64 = rng.sample(StandardNormal);
                    len2 += z * z;
                    out.push(z);
                }
                let len = len2.sqrt();
                out[start..].iter_mut().for_each(|c| *c *= k / len);
            }
        }
    }

    pub fn sample(&self, features: usize, seed: u64) -> Result<FeatureField> {
        if features < MIN_FEATURES {
            return Err(invalid(alloc::format!("need at least {MIN_FEATURES} features")));
        }
        let mut rng = stream(seed);
        let mut frequencies = Vec::with_capacity(features * self.dim);
        let mut phases = Vec::with_capacity(features);
        for _ in 0..features {
            self.frequency(&mut rng, &mut frequencies);
            phases.push(rng.random::<f64>() * 2.0 * core::f64::consts::PI);
        }
        Ok(FeatureField {
            dim: self.dim,
            frequencies,
            phases,
            amplitude: (2.0 * self.variance / features as f64).sqrt(),
            seed,
        })
    }
}

/// A variate with density `sinc^2(u) / pi`, by rejection from `min(1, u^-2)`.
fn sinc_squared_variate(rng: &mut StreamRng) -> f64 {
    loop {
        let u = if rng.random::<bool>() {
            2.0 * rng.random::<f64>() - 1.0
        } else {
            let v = 1.0 - rng.random::<f64>();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign / v
        };
        let sinc2 = if u == 0.0 {
            1.0
        } else {
            let s = libm::sin(u) / u;
            s * s
        };
        let envelope = if u.abs() <= 1.0 { 1.0 } else { 1.0 / (u * u) };
        if rng.random::<f64>() * envelope <= sinc2 {
            return u;
        }
    }
}

/// `V(x) = amplitude sum_k cos(xi_k . x + theta_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    dim: usize,
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    amplitude: f64,
    seed: u64,
}

pub fn sample_feature_field(model: &CovarianceModel, features: usize, seed: u64) -> Result<FeatureField> {
    FeatureSampler::new(model)?.sample(features, seed)
}

impl FeatureField {
    pub fn features(&self) -> usize {
        self.phases.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .frequencies
            .chunks_exact(self.dim)
            .zip(&self.phases)
            .map(|(xi, theta)| libm::cos(xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + theta))
            .sum();
        self.amplitude * sum
    }
}

impl Potential for FeatureField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.evaluate(x))
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{build_gaussian_model, CovarianceSpec};
    use approx::assert_relative_eq;

    fn triangular(dim: usize) -> CovarianceModel {
        build_gaussian_model(&CovarianceSpec::TensorTriangular { dim, variance: 1.0, scale: 1.0 }).unwrap()
    }

    fn bump(dim: usize) -> CovarianceModel {
        build_gaussian_model(&CovarianceSpec::GaussianBump { dim, variance: 1.0, length: 0.5, radius: 1.0 }).unwrap()
    }

    #[test]
    fn grid_sampling_is_deterministic() {
        let model = triangular(2);
        let window = BoundingBox::cube(2, 2.0).unwrap();
        let h = default_spacing(&model);
        let a = sample_grid_field(&model, &window, h, 5).unwrap();
        let b = sample_grid_field(&model, &window, h, 5).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.diagnostics().clamped_fraction < MAX_CLAMPED_FRACTION);
        assert_ne!(a.values, sample_grid_field(&model, &window, h, 6).unwrap().values);
    }

    #[test]
    fn interpolation_identities() {
        let model = triangular(1);
        let window = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        let field = sample_grid_field(&model, &window, 0.125, 1).unwrap();
        assert_eq!(field.field_value(&[0.25]).unwrap(), field.node(&[2]));
        let mid = 0.5 * (field.node(&[2]) + field.node(&[3]));
        assert_relative_eq!(field.field_value(&[0.3125]).unwrap(), mid, epsilon = 1e-14);
        assert!(matches!(field.field_value(&[1.5]), Err(Error::OutOfDomain)));
    }

    #[test]
    fn rejects_coarse_spacing_and_huge_grids() {
        let model = triangular(1);
        let window = BoundingBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(sample_grid_field(&model, &window, 0.5, 0).is_err());
        let huge = BoundingBox::cube(3, 1e4).unwrap();
        assert!(matches!(
            sample_grid_field(&triangular(3), &huge, 0.1, 0),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn node_variance_and_decorrelation_d1() {
        let model = triangular(1);
        let window = BoundingBox::new(vec![0.0], vec![3.0]).unwrap();
        let h = default_spacing(&model);
        let m = 100_000;
        let (mut s00, mut s0f, mut sff) = (0.0, 0.0, 0.0);
        let mut v0 = Vec::with_capacity(m);
        let mut c = Vec::with_capacity(m);
        for seed in 0..m as u64 {
            let f = sample_grid_field(&model, &window, h, seed).unwrap();
            let a = f.node(&[0]);
            let b = f.node(&[32]);
            s00 += a * a;
            s0f += a * b;
            sff += b * b;
            v0.push(a * a);
            c.push(a * b);
        }
        let mf = m as f64;
        let se = |xs: &[f64], mean: f64| (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (mf - 1.0) / mf).sqrt();
        let var = s00 / mf;
        assert!((var - 1.0).abs() < 4.0 * se(&v0, var), "var {var}");
        // Lag 2 lies beyond the support radius 1.
        let cov = s0f / mf;
        assert!(cov.abs() < 4.0 * se(&c, cov), "cov {cov}");
        assert!((sff / mf - 1.0).abs() < 0.05);
    }

    #[test]
    fn bump_grid_lag_covariances_d2() {
        let model = bump(2);
        let window = BoundingBox::cube(2, 0.5).unwrap();
        let h = 1.0 / 16.0;
        let lags = [[0usize, 0usize], [4, 0], [0, 6], [5, 5], [8, 0]];
        let m = 10_000;
        let mut sums = vec![Vec::with_capacity(m); lags.len()];
        for seed in 0..m as u64 {
            let f = sample_grid_field(&model, &window, h, seed).unwrap();
            let base = f.node(&[0, 0]);
            for (s, lag) in sums.iter_mut().zip(&lags) {
                s.push(base * f.node(lag));
            }
        }
        for (s, lag) in sums.iter().zip(&lags) {
            let mean = s.iter().sum::<f64>() / m as f64;
            let sd = (s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
            let target = model.evaluate(&[lag[0] as f64 * h, lag[1] as f64 * h]);
            assert!((mean - target).abs() < 4.0 * sd / (m as f64).sqrt(), "lag {lag:?}: {mean} vs {target}");
        }
    }

    #[test]
    fn feature_field_covariance() {
        for model in [triangular(2), bump(3)] {
            let sampler = FeatureSampler::new(&model).unwrap();
            assert!(sampler.captured_mass() > 0.99);
            let a = sampler.sample(4096, 7).unwrap();
            assert_eq!(a, sampler.sample(4096, 7).unwrap());
            let dim = model.dim();
            let lag: Vec<f64> = (0..dim).map(|i| if i == 0 { 0.3 } else { 0.0 }).collect();
            // Average of cos(xi . lag) over many features estimates R(lag) / R(0).
            let big = sampler.sample(200_000, 8).unwrap();
            let est: f64 = big
                .frequencies()
                .chunks_exact(dim)
                .map(|xi| libm::cos(xi.iter().zip(&lag).map(|(a, b)| a * b).sum::<f64>()))
                .sum::<f64>()
                / 200_000.0;
            let se = (0.5f64 / 200_000.0).sqrt();
            assert!((est - model.evaluate(&lag)).abs() < 4.0 * se + 1e-3, "{est} vs {}", model.evaluate(&lag));
        }
    }

    #[test]
    fn feature_field_is_centred() {
        let model = triangular(1);
        let sampler = FeatureSampler::new(&model).unwrap();
        let m = 20_000;
        let values: Vec<f64> = (0..m).map(|s| sampler.sample(64, s).unwrap().evaluate(&[0.37])).collect();
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        assert!(mean.abs() < 4.0 * (var / m as f64).sqrt());
        assert!(sampler.sample(10, 0).is_err());
    }
}
