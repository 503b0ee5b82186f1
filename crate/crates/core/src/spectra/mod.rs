//! Covariance models, power spectra, Bochner validation and limit constants.

mod bochner;
mod radial;
mod shape;
mod sigma;
mod tensor;

use num_traits::Float;
use alloc::vec::Vec;

pub use bochner::{check_bochner, BochnerReport};
pub use shape::{Atom, Profile, ShapeFunction, ShapeSpec};
pub use sigma::{admissibility_exponent, sigma_limit, sigma_routes, SigmaRoutes};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, norm};
use crate::math::{angular_kernel_minus_one, sphere_area, GaussLegendre};
use crate::quad::{integrate_breaks, Tolerance};
use radial::RadialProfile;
use tensor::TensorTriangular;

/// Relative floor below which `R^(0)` counts as zero.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
/// Bochner tolerance relative to `R(0)`.
pub const BOCHNER_TOLERANCE: f64 = 1e-8;

/// Parametric Gaussian covariance families.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CovarianceSpec {
    /// `variance * prod_i (1 - |x_i| / scale)_+`.
    TensorTriangular {
        dim: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        variance: f64,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        scale: f64,
    },
    /// Gaussian `variance * exp(-r^2 / (2 length^2))` tapered to zero at `radius`
    /// by a Wendland function, which keeps it positive definite.
    GaussianBump {
        dim: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        variance: f64,
        #[cfg_attr(feature = "serde", serde(default = "half"))]
        length: f64,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        radius: f64,
    },
    /// Isotropic profile, linear between knots, zero after the last knot.
    Tabulated {
        dim: usize,
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn half() -> f64 {
    0.5
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::TensorTriangular { dim, .. }
            | CovarianceSpec::GaussianBump { dim, .. }
            | CovarianceSpec::Tabulated { dim, .. } => *dim,
        }
    }
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Gaussian(CovarianceSpec),
    ShotNoise(ShapeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SpectrumKind {
    ClosedForm,
    NumericTransform,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub(crate) enum ModelKind {
    Tensor(TensorTriangular),
    Radial(RadialProfile),
    Shot(ShotCovariance),
}

/// A stationary, compactly supported covariance with its spectrum.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    dim: usize,
    pub(crate) kind: ModelKind,
    source: ModelSource,
    support_radius: f64,
    r_zero: f64,
    r_hat_zero: f64,
    degenerate: bool,
    gl: GaussLegendre,
}

/// Builds a Gaussian covariance model, validating it against Bochner's theorem
/// whenever its spectrum is computed numerically.
pub fn build_gaussian_model(spec: &CovarianceSpec) -> Result<CovarianceModel> {
    let dim = spec.dim();
    check_dim(dim)?;
    let kind = match spec {
        CovarianceSpec::TensorTriangular { variance, scale, .. } => {
            ModelKind::Tensor(TensorTriangular::new(dim, *variance, *scale)?)
        }
        CovarianceSpec::GaussianBump {
            variance,
            length,
            radius,
            ..
        } => ModelKind::Radial(RadialProfile::gaussian_bump(dim, *variance, *length, *radius)?),
        CovarianceSpec::Tabulated { radii, values, .. } => {
            ModelKind::Radial(RadialProfile::tabulated(radii.clone(), values.clone())?)
        }
    };
    let model = CovarianceModel::assemble(dim, kind, ModelSource::Gaussian(spec.clone()))?;
    if model.spectrum_kind() == SpectrumKind::NumericTransform {
        let report = check_bochner(&model);
        if !report.passed {
            return Err(Error::NotPositiveDefinite {
                min: report.min_spectrum,
                tolerance: report.tolerance,
            });
        }
    }
    Ok(model)
}

/// Covariance `R_p = phi * phi~` of the shot-noise potential built on `shape`.
pub fn shot_noise_model(shape: &ShapeFunction) -> Result<CovarianceModel> {
    let kind = ModelKind::Shot(ShotCovariance::new(shape.clone()));
    CovarianceModel::assemble(shape.dim(), kind, ModelSource::ShotNoise(shape.spec().clone()))
}

/// `R^(xi)`, with tiny negative numeric values clamped to zero.
pub fn power_spectrum(model: &CovarianceModel, xi: &[f64]) -> Result<f64> {
    if xi.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: xi.len(),
        });
    }
    let value = model.spectrum(xi);
    let tolerance = model.bochner_tolerance();
    if value < -tolerance || !value.is_finite() {
        return Err(Error::NotPositiveDefinite { min: value, tolerance });
    }
    Ok(value.max(0.0))
}

impl CovarianceModel {
    fn assemble(dim: usize, kind: ModelKind, source: ModelSource) -> Result<Self> {
        check_dim(dim)?;
        let (support_radius, r_zero, r_hat_zero) = match &kind {
            ModelKind::Tensor(t) => (t.support_radius(), t.variance, t.r_hat_zero()),
            ModelKind::Radial(p) => (p.support_radius(), p.value(0.0), p.integral(dim)?),
            ModelKind::Shot(s) => (s.support_radius(), s.value_at_zero(), s.r_hat_zero()),
        };
        let degenerate = r_hat_zero.abs() <= DEGENERACY_TOLERANCE * r_zero.abs();
        Ok(Self {
            dim,
            kind,
            source,
            support_radius,
            r_zero,
            r_hat_zero,
            degenerate,
            gl: GaussLegendre::new(16),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &ModelSource {
        &self.source
    }

    /// `R(x) = 0` for `|x|` beyond this radius.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `R(0)`, the pointwise variance.
    pub fn variance(&self) -> f64 {
        self.r_zero
    }

    /// `R^(0) = int R(x) dx`.
    pub fn r_hat_zero(&self) -> f64 {
        self.r_hat_zero
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn spectrum_kind(&self) -> SpectrumKind {
        match self.kind {
            ModelKind::Tensor(_) => SpectrumKind::ClosedForm,
            ModelKind::Radial(_) => SpectrumKind::NumericTransform,
            ModelKind::Shot(ref s) => {
                if s.shape.dim() == 1 && s.shape.profile() == Profile::Tent {
                    SpectrumKind::ClosedForm
                } else {
                    SpectrumKind::NumericTransform
                }
            }
        }
    }

    pub fn bochner_tolerance(&self) -> f64 {
        BOCHNER_TOLERANCE * self.r_zero.abs()
    }

    /// `R(x)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ModelKind::Tensor(t) => t.value(x),
            ModelKind::Radial(p) => p.value(norm(x)),
            ModelKind::Shot(s) => s.value(x),
        }
    }

    /// Unclamped `R^(xi)`.
    pub fn spectrum(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Tensor(t) => t.spectrum(xi),
            ModelKind::Radial(_) => self.spectral_radial_mean(norm(xi)),
            ModelKind::Shot(s) => s.spectrum(xi),
        }
    }

    /// Mean of `R^` over the sphere of radius `k`, for isotropic and shot-noise models.
    pub(crate) fn spectral_radial_mean(&self, k: f64) -> f64 {
        match &self.kind {
            ModelKind::Radial(p) => p.hankel(self.dim, k, self.r_hat_zero, &self.gl),
            ModelKind::Shot(s) => s.spectral_radial_mean(k),
            ModelKind::Tensor(_) => unreachable!("separable models are handled axis by axis"),
        }
    }

    /// Mean of `R` over the sphere of radius `r`, for isotropic and shot-noise models.
    pub(crate) fn radial_mean(&self, r: f64) -> f64 {
        match &self.kind {
            ModelKind::Radial(p) => p.value(r),
            ModelKind::Shot(s) => s.radial_mean(r),
            ModelKind::Tensor(_) => unreachable!("separable models are handled axis by axis"),
        }
    }

    /// Kinks of the radial mean, used as quadrature breakpoints.
    pub(crate) fn radial_breakpoints(&self) -> Vec<f64> {
        let mut breaks = match &self.kind {
            ModelKind::Radial(p) => p.breakpoints(),
            ModelKind::Shot(s) => s.breakpoints(),
            ModelKind::Tensor(_) => alloc::vec![0.0, self.support_radius],
        };
        breaks.push(0.0);
        breaks.push(self.support_radius);
        breaks.retain(|b| *b >= 0.0 && *b <= self.support_radius);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// `E R(B_u) = int R(x) q_u(x) dx`, the heat-smoothed covariance.
    pub fn heat_moment(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(self.r_zero);
        }
        if let ModelKind::Tensor(t) = &self.kind {
            return Ok(t.heat_moment(u));
        }
        let d = self.dim;
        let root = u.sqrt();
        let mut breaks = self.radial_breakpoints();
        let mut edge = root;
        while edge < self.support_radius {
            breaks.push(edge);
            edge *= 2.0;
        }
        // Beyond 40 standard deviations the heat kernel is below 1e-300.
        let cut = 40.0 * root;
        breaks.retain(|b| *b <= cut);
        if cut < self.support_radius {
            breaks.push(cut);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let norm_const = libm::pow(2.0 * core::f64::consts::PI * u, -(d as f64) / 2.0);
        let est = integrate_breaks(
            |r| self.radial_mean(r) * libm::exp(-0.5 * r * r / u) * r.powi(d as i32 - 1),
            &breaks,
            // The floor matters only once cancellation makes G tiny (degenerate models).
            Tolerance::relative(1e-12).with_abs(1e-14 * self.r_zero.abs() * self.support_radius.powi(d as i32)),
        )?;
        Ok(sphere_area(d) * norm_const * est.value)
    }

    /// The model for covariance `c * R`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(crate::error::invalid("covariance scale factor must be positive"));
        }
        let (kind, source) = match (&self.kind, &self.source) {
            (ModelKind::Tensor(t), ModelSource::Gaussian(CovarianceSpec::TensorTriangular { dim, scale, .. })) => {
                let t = TensorTriangular::new(t.dim, t.variance * c, t.scale)?;
                (
                    ModelKind::Tensor(t),
                    ModelSource::Gaussian(CovarianceSpec::TensorTriangular {
                        dim: *dim,
                        variance: t.variance,
                        scale: *scale,
                    }),
                )
            }
            (ModelKind::Radial(p), ModelSource::Gaussian(spec)) => {
                let spec = match spec {
                    CovarianceSpec::GaussianBump {
                        dim,
                        variance,
                        length,
                        radius,
                    } => CovarianceSpec::GaussianBump {
                        dim: *dim,
                        variance: variance * c,
                        length: *length,
                        radius: *radius,
                    },
                    CovarianceSpec::Tabulated { dim, radii, values } => CovarianceSpec::Tabulated {
                        dim: *dim,
                        radii: radii.clone(),
                        values: values.iter().map(|v| v * c).collect(),
                    },
                    other => other.clone(),
                };
                (ModelKind::Radial(p.scaled(c)), ModelSource::Gaussian(spec))
            }
            (ModelKind::Shot(s), _) => {
                let root = c.sqrt();
                let mut spec = s.shape.spec().clone();
                let mut atoms = s.shape.atoms().to_vec();
                for atom in &mut atoms {
                    atom.weight *= root;
                }
                spec.atoms = Some(atoms);
                let shape = ShapeFunction::new(spec.clone())?;
                (ModelKind::Shot(ShotCovariance::new(shape)), ModelSource::ShotNoise(spec))
            }
            _ => unreachable!("model kind and source always agree"),
        };
        Self::assemble(self.dim, kind, source)
    }
}

/// Pair term of a shot-noise covariance: `weight * a^d C(|x + offset| / a)`.
#[derive(Debug, Clone)]
struct PairTerm {
    weight: f64,
    offset: Vec<f64>,
    distance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ShotCovariance {
    pub(crate) shape: ShapeFunction,
    pairs: Vec<PairTerm>,
    /// Pair weights merged by offset length.
    rings: Vec<(f64, f64)>,
    weight_sum: f64,
    gl: GaussLegendre,
}

impl ShotCovariance {
    fn new(shape: ShapeFunction) -> Self {
        let atoms = shape.atoms();
        let mut pairs: Vec<PairTerm> = Vec::new();
        for k in atoms {
            for l in atoms {
                let offset: Vec<f64> = l.center.iter().zip(&k.center).map(|(a, b)| a - b).collect();
                let weight = k.weight * l.weight;
                if let Some(p) = pairs.iter_mut().find(|p| p.offset == offset) {
                    p.weight += weight;
                } else {
                    let distance = norm(&offset);
                    pairs.push(PairTerm {
                        weight,
                        offset,
                        distance,
                    });
                }
            }
        }
        pairs.retain(|p| p.weight != 0.0);
        let mut rings: Vec<(f64, f64)> = Vec::new();
        for p in &pairs {
            match rings.iter_mut().find(|(d, _)| (*d - p.distance).abs() <= 1e-14 * (1.0 + p.distance)) {
                Some(ring) => ring.1 += p.weight,
                None => rings.push((p.distance, p.weight)),
            }
        }
        rings.retain(|r| r.1 != 0.0);
        let weight_sum: f64 = atoms.iter().map(|a| a.weight).sum();
        Self {
            shape,
            pairs,
            rings,
            weight_sum,
            gl: GaussLegendre::new(32),
        }
    }

    fn scale_pow(&self) -> f64 {
        self.shape.atom_radius().powi(self.shape.dim() as i32)
    }

    fn support_radius(&self) -> f64 {
        let reach = self.pairs.iter().map(|p| p.distance).fold(0.0, f64::max);
        if self.pairs.is_empty() {
            0.0
        } else {
            reach + 2.0 * self.shape.atom_radius()
        }
    }

    fn value_at_zero(&self) -> f64 {
        let a = self.shape.atom_radius();
        self.scale_pow()
            * self
                .pairs
                .iter()
                .map(|p| p.weight * self.shape.autocorrelation.value(p.distance / a))
                .sum::<f64>()
    }

    fn r_hat_zero(&self) -> f64 {
        let m = self.shape.mass();
        m * m
    }

    fn value(&self, x: &[f64]) -> f64 {
        let a = self.shape.atom_radius();
        let ac = &self.shape.autocorrelation;
        let mut total = 0.0;
        for p in &self.pairs {
            let d2: f64 = x.iter().zip(&p.offset).map(|(u, v)| (u + v) * (u + v)).sum();
            let r = d2.sqrt() / a;
            if r < 2.0 {
                total += p.weight * ac.value(r);
            }
        }
        self.scale_pow() * total
    }

    fn spectrum(&self, xi: &[f64]) -> f64 {
        self.shape.fourier(xi).norm_sqr()
    }

    fn spectral_radial_mean(&self, k: f64) -> f64 {
        let atom = self.shape.atom_transform(k);
        let d = self.shape.dim();
        let mut ring_sum = self.weight_sum * self.weight_sum;
        for (distance, weight) in &self.rings {
            ring_sum += weight * angular_kernel_minus_one(d, k * distance);
        }
        atom * atom * ring_sum
    }

    fn radial_mean(&self, r: f64) -> f64 {
        let a = self.shape.atom_radius();
        let d = self.shape.dim();
        let ac = &self.shape.autocorrelation;
        let mut total = 0.0;
        for (delta, weight) in &self.rings {
            total += weight * shifted_sphere_mean(d, r, *delta, 2.0 * a, &self.gl, |rho| ac.value(rho / a));
        }
        self.scale_pow() * total
    }

    fn breakpoints(&self) -> Vec<f64> {
        let reach = 2.0 * self.shape.atom_radius();
        let mut out = alloc::vec![0.0];
        for (delta, _) in &self.rings {
            for b in [*delta - reach, *delta, *delta + reach] {
                if b > 0.0 {
                    out.push(b);
                }
            }
        }
        out
    }
}

/// Mean of `f(|r w + delta e|)` over unit vectors `w`, where `f` vanishes beyond `reach`.
fn shifted_sphere_mean(
    dim: usize,
    r: f64,
    delta: f64,
    reach: f64,
    gl: &GaussLegendre,
    f: impl Fn(f64) -> f64,
) -> f64 {
    if delta == 0.0 || r == 0.0 {
        return f(r + delta);
    }
    if dim == 1 {
        return 0.5 * (f((r + delta).abs()) + f((r - delta).abs()));
    }
    if (r - delta).abs() >= reach {
        return 0.0;
    }
    // |r w + delta e|^2 = r^2 + delta^2 - 2 r delta cos(theta), theta from -e.
    let c = (r * r + delta * delta - reach * reach) / (2.0 * r * delta);
    let theta_max = if c <= -1.0 {
        core::f64::consts::PI
    } else {
        libm::acos(c.min(1.0))
    };
    let power = dim as i32 - 2;
    let integral = gl.integrate(0.0, theta_max, |theta| {
        let rho2 = r * r + delta * delta - 2.0 * r * delta * libm::cos(theta);
        f(rho2.max(0.0).sqrt()) * libm::sin(theta).powi(power)
    });
    sphere_area(dim - 1) * integral / sphere_area(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    fn triangular(dim: usize) -> CovarianceModel {
        build_gaussian_model(&CovarianceSpec::TensorTriangular {
            dim,
            variance: 1.0,
            scale: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn triangular_closed_forms() {
        let m1 = triangular(1);
        assert_relative_eq!(m1.r_hat_zero(), 1.0);
        assert_relative_eq!(m1.support_radius(), 1.0);
        assert_relative_eq!(power_spectrum(&m1, &[0.0]).unwrap(), 1.0);
        assert!(power_spectrum(&m1, &[2.0 * core::f64::consts::PI]).unwrap() < 1e-30);
        // Independent quadrature of the cosine transform at xi = 1.7.
        let est = integrate_breaks(
            |x: f64| (1.0 - x.abs()).max(0.0) * libm::cos(1.7 * x),
            &[-1.0, 0.0, 1.0],
            Tolerance::relative(1e-13),
        )
        .unwrap();
        assert_relative_eq!(power_spectrum(&m1, &[1.7]).unwrap(), est.value, max_relative = 1e-12);
        let m2 = triangular(2);
        assert_relative_eq!(m2.r_hat_zero(), 1.0);
        assert!(!m2.is_degenerate());
    }

    #[test]
    fn r_hat_zero_matches_direct_quadrature() {
        let model = build_gaussian_model(&CovarianceSpec::GaussianBump {
            dim: 1,
            variance: 2.0,
            length: 0.4,
            radius: 1.5,
        })
        .unwrap();
        let est = integrate(|x| model.evaluate(&[x]), -1.5, 1.5, Tolerance::relative(1e-12)).unwrap();
        assert_relative_eq!(model.r_hat_zero(), est.value, max_relative = 1e-6);
    }

    #[test]
    fn tent_shot_noise_constants() {
        let shape = ShapeFunction::unit(1, Profile::Tent).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        assert_relative_eq!(model.variance(), 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(model.r_hat_zero(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(model.support_radius(), 2.0);
        assert!(!model.is_degenerate());
        // Cross-check R_p(0.5) = int phi(x + 0.5) phi(x) dx.
        let est = integrate_breaks(
            |x| shape.evaluate(&[x + 0.5]) * shape.evaluate(&[x]),
            &[-1.5, -0.5, 0.0, 0.5, 1.0],
            Tolerance::relative(1e-13),
        )
        .unwrap();
        assert_relative_eq!(model.evaluate(&[0.5]), est.value, max_relative = 1e-12);
    }

    #[test]
    fn tent_difference_is_degenerate() {
        let shape = ShapeFunction::new(ShapeSpec::tent_difference(1, 2.0)).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        assert_eq!(model.r_hat_zero(), 0.0);
        assert!(model.is_degenerate());
        assert_relative_eq!(model.support_radius(), 4.0);
        assert_relative_eq!(model.variance(), 4.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_shape_gives_zero_covariance() {
        let mut spec = ShapeSpec::single(2, Profile::Tent, 1.0);
        spec.atoms = Some(alloc::vec![Atom {
            weight: 0.0,
            center: alloc::vec![0.0, 0.0]
        }]);
        let model = shot_noise_model(&ShapeFunction::new(spec).unwrap()).unwrap();
        assert_eq!(model.evaluate(&[0.1, 0.2]), 0.0);
        assert_eq!(model.variance(), 0.0);
        assert_eq!(model.spectrum(&[1.0, 0.0]), 0.0);
        assert!(model.is_degenerate());
    }

    #[test]
    fn shot_spectrum_radial_mean_matches_direction_average_in_2d() {
        let shape = ShapeFunction::new(ShapeSpec::tent_difference(2, 1.5)).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        let gl = GaussLegendre::new(64);
        for &k in &[0.3, 2.0, 5.0] {
            let avg = gl.integrate(0.0, 2.0 * core::f64::consts::PI, |t| {
                model.spectrum(&[k * libm::cos(t), k * libm::sin(t)])
            }) / (2.0 * core::f64::consts::PI);
            assert_relative_eq!(model.spectral_radial_mean(k), avg, max_relative = 1e-9);
        }
    }

    #[test]
    fn shot_radial_mean_matches_direction_average_in_2d() {
        let shape = ShapeFunction::new(ShapeSpec::tent_difference(2, 1.5)).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        for &r in &[0.2, 1.0, 1.5, 2.7] {
            let est = integrate(
                |t| model.evaluate(&[r * libm::cos(t), r * libm::sin(t)]),
                0.0,
                2.0 * core::f64::consts::PI,
                Tolerance::relative(1e-11).with_abs(1e-13),
            )
            .unwrap();
            let avg = est.value / (2.0 * core::f64::consts::PI);
            assert!((model.radial_mean(r) - avg).abs() < 1e-7, "r={r}: {} vs {avg}", model.radial_mean(r));
        }
    }

    #[test]
    fn heat_moment_radial_matches_tensor_free_check() {
        // For a 1-D tent R_p, int R q_u against direct quadrature.
        let shape = ShapeFunction::unit(1, Profile::Tent).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        for &u in &[1e-3, 0.5, 30.0] {
            let q = |x: f64| model.evaluate(&[x]) * libm::exp(-x * x / (2.0 * u)) / (2.0 * core::f64::consts::PI * u).sqrt();
            let est = integrate_breaks(q, &[-2.0, -1.0, 0.0, 1.0, 2.0], Tolerance::relative(1e-12)).unwrap();
            assert_relative_eq!(model.heat_moment(u).unwrap(), est.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn power_spectrum_rejects_wrong_dimension() {
        assert!(power_spectrum(&triangular(2), &[0.0]).is_err());
    }

    #[test]
    fn scaled_model_scales_variance_and_spectrum() {
        let shape = ShapeFunction::unit(2, Profile::Tent).unwrap();
        let model = shot_noise_model(&shape).unwrap();
        let scaled = model.scaled(3.0).unwrap();
        assert_relative_eq!(scaled.variance(), 3.0 * model.variance(), max_relative = 1e-12);
        assert_relative_eq!(scaled.r_hat_zero(), 3.0 * model.r_hat_zero(), max_relative = 1e-12);
        assert_relative_eq!(scaled.spectrum(&[0.4, 1.0]), 3.0 * model.spectrum(&[0.4, 1.0]), max_relative = 1e-12);
    }
}
