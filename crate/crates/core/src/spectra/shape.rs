//! Compactly supported bump functions for shot noise.
//!
//! A shape is a finite signed sum of radial atoms
//! `phi(x) = sum_k w_k psi(|x - c_k| / a)` sharing one profile `psi` and
//! radius `a`, which covers both the single-bump and the zero-mass cases.

use num_traits::Float;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::geometry::{check_dim, norm};
use crate::math::{angular_kernel, angular_kernel_minus_one, sphere_area, GaussLegendre};
use crate::quad::{integrate_breaks, Tolerance};
use crate::spline::UniformSpline;

/// Radial profile on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Profile {
    /// `(1 - r)_+`: the tent in one dimension, a cone above.
    Tent,
    /// `(1 - r^2)_+^3`.
    Bump,
}

impl Profile {
    pub fn value(self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::Tent => 1.0 - r,
            Profile::Bump => {
                let q = 1.0 - r * r;
                q * q * q
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub weight: f64,
    pub center: Vec<f64>,
}

/// Serializable description of a shape function.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShapeSpec {
    pub dim: usize,
    pub profile: Profile,
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub radius: f64,
    /// Defaults to a single unit-weight atom at the origin.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub atoms: Option<Vec<Atom>>,
}

#[cfg(feature = "serde")]
fn unit() -> f64 {
    1.0
}

impl ShapeSpec {
    pub fn single(dim: usize, profile: Profile, radius: f64) -> Self {
        Self {
            dim,
            profile,
            radius,
            atoms: None,
        }
    }

    /// Unit tent at the origin minus a unit tent at `offset` along the first axis.
    pub fn tent_difference(dim: usize, offset: f64) -> Self {
        let mut shifted = vec![0.0; dim];
        shifted[0] = offset;
        Self {
            dim,
            profile: Profile::Tent,
            radius: 1.0,
            atoms: Some(vec![
                Atom {
                    weight: 1.0,
                    center: vec![0.0; dim],
                },
                Atom {
                    weight: -1.0,
                    center: shifted,
                },
            ]),
        }
    }

    fn resolved_atoms(&self) -> Vec<Atom> {
        self.atoms.clone().unwrap_or_else(|| {
            vec![Atom {
                weight: 1.0,
                center: vec![0.0; self.dim],
            }]
        })
    }
}

/// Autocorrelation `C(r) = int psi(|z|) psi(|z + r e|) dz` of a unit profile.
#[derive(Debug, Clone)]
pub(crate) struct Autocorrelation {
    dim: usize,
    profile: Profile,
    table: Option<UniformSpline>,
}

const AUTOCORRELATION_KNOTS: usize = 1024;

impl Autocorrelation {
    pub(crate) fn new(dim: usize, profile: Profile) -> Result<Self> {
        if dim == 1 && profile == Profile::Tent {
            return Ok(Self {
                dim,
                profile,
                table: None,
            });
        }
        let step = 2.0 / AUTOCORRELATION_KNOTS as f64;
        let mut values = Vec::with_capacity(AUTOCORRELATION_KNOTS + 1);
        let gl = GaussLegendre::new(16);
        for i in 0..=AUTOCORRELATION_KNOTS {
            let r = i as f64 * step;
            let v = if i == AUTOCORRELATION_KNOTS {
                0.0
            } else if dim == 1 {
                line_autocorrelation(profile, r, &gl)
            } else {
                bipolar_autocorrelation(dim, profile, r)?
            };
            values.push(v);
        }
        Ok(Self {
            dim,
            profile,
            table: Some(UniformSpline::clamped(0.0, step, values, 0.0, 0.0)),
        })
    }

    pub(crate) fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 2.0 {
            return 0.0;
        }
        match &self.table {
            Some(spline) => spline.eval(r),
            None => {
                debug_assert!(self.dim == 1 && self.profile == Profile::Tent);
                if r <= 1.0 {
                    2.0 / 3.0 - r * r + 0.5 * r * r * r
                } else {
                    let q = 2.0 - r;
                    q * q * q / 6.0
                }
            }
        }
    }
}

fn line_autocorrelation(profile: Profile, r: f64, gl: &GaussLegendre) -> f64 {
    // Integrand is polynomial between the kinks at -1, -r, 0 and 1 - r.
    let mut cuts = vec![-1.0, -r, 0.0, 1.0 - r];
    cuts.retain(|c| *c >= -1.0 && *c <= 1.0 - r);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| gl.integrate(w[0], w[1], |u| profile.value(u.abs()) * profile.value((u + r).abs())))
        .sum()
}

fn bipolar_autocorrelation(dim: usize, profile: Profile, r: f64) -> Result<f64> {
    // z = s * omega; the angle theta is measured from -e so that
    // |z + r e|^2 = s^2 + r^2 - 2 s r cos(theta) is handled symmetrically.
    let shell = sphere_area(dim - 1);
    let power = (dim - 2) as i32;
    let tol = Tolerance::relative(1e-12).with_abs(1e-15);
    let outer = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        // Points with |z + r e| < 1 have cos(theta) > c_star.
        let c_star = (s * s + r * r - 1.0) / (2.0 * s * r.max(1e-300));
        let theta_max = if r == 0.0 {
            if s < 1.0 {
                core::f64::consts::PI
            } else {
                0.0
            }
        } else if c_star >= 1.0 {
            0.0
        } else if c_star <= -1.0 {
            core::f64::consts::PI
        } else {
            libm::acos(c_star)
        };
        if theta_max <= 0.0 {
            return 0.0;
        }
        let inner = |theta: f64| {
            let rho2 = s * s + r * r - 2.0 * s * r * libm::cos(theta);
            profile.value(rho2.max(0.0).sqrt()) * libm::sin(theta).powi(power)
        };
        let est = integrate_breaks(inner, &[0.0, theta_max], tol).map(|e| e.value).unwrap_or(f64::NAN);
        shell * profile.value(s) * s.powi(dim as i32 - 1) * est
    };
    let mut breaks = vec![0.0, 1.0];
    for b in [r, (1.0 - r).abs()] {
        if b > 0.0 && b < 1.0 {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let est = integrate_breaks(outer, &breaks, Tolerance::relative(1e-11).with_abs(1e-14))?;
    if !est.value.is_finite() {
        return Err(invalid("autocorrelation quadrature failed".to_string()));
    }
    Ok(est.value)
}

/// A validated shape function with its mass and autocorrelation.
#[derive(Debug, Clone)]
pub struct ShapeFunction {
    spec: ShapeSpec,
    atoms: Vec<Atom>,
    support_radius: f64,
    mass: f64,
    pub(crate) autocorrelation: Autocorrelation,
    gl: GaussLegendre,
}

impl ShapeFunction {
    pub fn new(spec: ShapeSpec) -> Result<Self> {
        check_dim(spec.dim)?;
        if !(spec.radius.is_finite() && spec.radius > 0.0) {
            return Err(invalid("shape radius must be positive and finite"));
        }
        let atoms = spec.resolved_atoms();
        if atoms.is_empty() {
            return Err(invalid("shape needs at least one atom"));
        }
        for atom in &atoms {
            if atom.center.len() != spec.dim {
                return Err(crate::error::Error::DimensionMismatch {
                    expected: spec.dim,
                    got: atom.center.len(),
                });
            }
            if !atom.weight.is_finite() || atom.center.iter().any(|c| !c.is_finite()) {
                return Err(invalid("atom weights and centers must be finite"));
            }
        }
        let support_radius = atoms
            .iter()
            .map(|a| norm(&a.center) + spec.radius)
            .fold(0.0, f64::max);
        let unit_mass = unit_profile_mass(spec.dim, spec.profile);
        let weight_sum: f64 = atoms.iter().map(|a| a.weight).sum();
        let mass = weight_sum * unit_mass * spec.radius.powi(spec.dim as i32);
        let autocorrelation = Autocorrelation::new(spec.dim, spec.profile)?;
        Ok(Self {
            spec,
            atoms,
            support_radius,
            mass,
            autocorrelation,
            gl: GaussLegendre::new(16),
        })
    }

    /// Unit-radius single atom at the origin.
    pub fn unit(dim: usize, profile: Profile) -> Result<Self> {
        Self::new(ShapeSpec::single(dim, profile, 1.0))
    }

    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn profile(&self) -> Profile {
        self.spec.profile
    }

    pub fn atom_radius(&self) -> f64 {
        self.spec.radius
    }

    /// Radius of the smallest origin-centred ball containing the support.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `c_p`, the integral of the shape.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let a = self.spec.radius;
        self.atoms
            .iter()
            .map(|atom| {
                let d2: f64 = x.iter().zip(&atom.center).map(|(p, c)| (p - c) * (p - c)).sum();
                atom.weight * self.spec.profile.value(d2.sqrt() / a)
            })
            .sum()
    }

    /// Fourier transform of one atom of radius `a` at frequency modulus `k`.
    pub fn atom_transform(&self, k: f64) -> f64 {
        let a = self.spec.radius;
        a.powi(self.spec.dim as i32) * unit_profile_transform(self.spec.dim, self.spec.profile, a * k, &self.gl)
    }

    /// Fourier transform `int phi(x) exp(-i xi.x) dx`.
    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.phase_sum(xi) * self.atom_transform(norm(xi))
    }

    /// `sum_k w_k exp(-i xi.c_k)`.
    pub fn phase_sum(&self, xi: &[f64]) -> Complex64 {
        self.atoms
            .iter()
            .map(|atom| {
                let phase: f64 = xi.iter().zip(&atom.center).map(|(a, b)| a * b).sum();
                Complex64::from_polar(atom.weight, -phase)
            })
            .sum()
    }
}

fn unit_profile_mass(dim: usize, profile: Profile) -> f64 {
    let gl = GaussLegendre::new(16);
    sphere_area(dim) * gl.integrate(0.0, 1.0, |r| profile.value(r) * r.powi(dim as i32 - 1))
}

/// `S_{d-1} int_0^1 psi(r) Omega_d(k r) r^{d-1} dr`.
pub(crate) fn unit_profile_transform(dim: usize, profile: Profile, k: f64, gl: &GaussLegendre) -> f64 {
    let k = k.abs();
    if dim == 1 && profile == Profile::Tent {
        if k < 1e-8 {
            return 1.0 - k * k / 12.0;
        }
        let s = libm::sin(0.5 * k) / (0.5 * k);
        return s * s;
    }
    let panels = 1 + libm::ceil(k / 2.0) as usize;
    let area = sphere_area(dim);
    let base = if k < 1.0 { unit_profile_mass(dim, profile) } else { 0.0 };
    let integral = gl.integrate_panels(0.0, 1.0, panels, |r| {
        let kernel = if k < 1.0 {
            angular_kernel_minus_one(dim, k * r)
        } else {
            angular_kernel(dim, k * r)
        };
        profile.value(r) * kernel * r.powi(dim as i32 - 1)
    });
    base + area * integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    #[test]
    fn tent_masses() {
        // Cone of height 1 over the unit ball: S / (d (d + 1)).
        for d in 1..=4 {
            let shape = ShapeFunction::unit(d, Profile::Tent).unwrap();
            let expected = sphere_area(d) / (d * (d + 1)) as f64;
            assert_relative_eq!(shape.mass(), expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn tent_autocorrelation_d1_closed_form_matches_quadrature() {
        let ac = Autocorrelation::new(1, Profile::Tent).unwrap();
        let gl = GaussLegendre::new(16);
        for &r in &[0.0, 0.3, 1.0, 1.4, 1.99] {
            assert_relative_eq!(ac.value(r), line_autocorrelation(Profile::Tent, r, &gl), max_relative = 1e-12);
        }
        assert_relative_eq!(ac.value(0.0), 2.0 / 3.0);
    }

    #[test]
    fn autocorrelation_at_zero_is_squared_norm() {
        for d in 2..=3 {
            for profile in [Profile::Tent, Profile::Bump] {
                let ac = Autocorrelation::new(d, profile).unwrap();
                let sq = sphere_area(d)
                    * integrate(|r| profile.value(r).powi(2) * r.powi(d as i32 - 1), 0.0, 1.0, Tolerance::relative(1e-13))
                        .unwrap()
                        .value;
                assert_relative_eq!(ac.value(0.0), sq, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn autocorrelation_integrates_to_mass_squared() {
        let d = 2;
        let shape = ShapeFunction::unit(d, Profile::Tent).unwrap();
        let total = sphere_area(d)
            * integrate(|r| shape.autocorrelation.value(r) * r, 0.0, 2.0, Tolerance::relative(1e-12))
                .unwrap()
                .value;
        assert_relative_eq!(total, shape.mass() * shape.mass(), max_relative = 1e-7);
    }

    #[test]
    fn transform_at_zero_is_mass() {
        for d in 1..=4 {
            for profile in [Profile::Tent, Profile::Bump] {
                let shape = ShapeFunction::new(ShapeSpec::single(d, profile, 0.7)).unwrap();
                let zero = vec![0.0; d];
                assert_relative_eq!(shape.fourier(&zero).re, shape.mass(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tent_difference_has_zero_mass() {
        let shape = ShapeFunction::new(ShapeSpec::tent_difference(2, 2.0)).unwrap();
        assert_eq!(shape.mass(), 0.0);
        assert_relative_eq!(shape.support_radius(), 3.0);
        assert_relative_eq!(shape.evaluate(&[0.0, 0.0]), 1.0);
        assert_relative_eq!(shape.evaluate(&[2.0, 0.0]), -1.0);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ShapeFunction::new(ShapeSpec::single(0, Profile::Tent, 1.0)).is_err());
        assert!(ShapeFunction::new(ShapeSpec::single(2, Profile::Tent, -1.0)).is_err());
        let mut spec = ShapeSpec::tent_difference(2, 1.0);
        spec.atoms.as_mut().unwrap()[0].center = vec![0.0];
        assert!(ShapeFunction::new(spec).is_err());
    }
}
