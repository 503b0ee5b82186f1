//! Isotropic covariances given by a radial profile.

use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{angular_kernel, angular_kernel_minus_one, sphere_area, GaussLegendre};
use crate::quad::{integrate_breaks, Tolerance};

#[derive(Debug, Clone)]
pub(crate) enum RadialProfile {
    /// Gaussian tapered by the Wendland function `(1-t)^{l+1}((l+1)t+1)`.
    GaussianBump {
        variance: f64,
        length: f64,
        radius: f64,
        taper_exponent: f64,
    },
    /// Linear interpolation of `(radius, value)` knots.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl RadialProfile {
    pub(crate) fn gaussian_bump(dim: usize, variance: f64, length: f64, radius: f64) -> Result<Self> {
        for (name, v) in [("variance", variance), ("length", length), ("radius", radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(alloc::format!("gaussian bump {name} must be positive")));
            }
        }
        Ok(RadialProfile::GaussianBump {
            variance,
            length,
            radius,
            taper_exponent: (dim / 2 + 2) as f64,
        })
    }

    pub(crate) fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(invalid("tabulated profile needs matching radii/values with at least two knots"));
        }
        if radii[0] != 0.0 {
            return Err(invalid("tabulated profile must start at radius 0"));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !r.is_finite()) {
            return Err(invalid("tabulated radii must be finite and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tabulated values must be finite"));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(Error::NonCompactSupport);
        }
        Ok(RadialProfile::Tabulated { radii, values })
    }

    pub(crate) fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::GaussianBump { radius, .. } => *radius,
            RadialProfile::Tabulated { radii, values } => {
                // Last knot whose value is nonzero, extended to the next knot.
                let last = values.iter().rposition(|v| *v != 0.0);
                match last {
                    Some(i) => radii[(i + 1).min(radii.len() - 1)],
                    None => 0.0,
                }
            }
        }
    }

    pub(crate) fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            RadialProfile::GaussianBump {
                variance,
                length,
                radius,
                taper_exponent,
            } => {
                if r >= *radius {
                    return 0.0;
                }
                let t = r / radius;
                let l = taper_exponent;
                let taper = libm::pow(1.0 - t, l + 1.0) * ((l + 1.0) * t + 1.0);
                variance * libm::exp(-0.5 * r * r / (length * length)) * taper
            }
            RadialProfile::Tabulated { radii, values } => {
                let last = radii.len() - 1;
                if r >= radii[last] {
                    return 0.0;
                }
                let i = radii.partition_point(|x| *x <= r) - 1;
                let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Points where the profile is not smooth, including 0 and the support end.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::GaussianBump { radius, .. } => alloc::vec![0.0, *radius],
            RadialProfile::Tabulated { radii, .. } => {
                let end = self.support_radius();
                radii.iter().copied().filter(|r| *r <= end).collect()
            }
        }
    }

    pub(crate) fn scaled(&self, c: f64) -> Self {
        match self {
            RadialProfile::GaussianBump {
                variance,
                length,
                radius,
                taper_exponent,
            } => RadialProfile::GaussianBump {
                variance: variance * c,
                length: *length,
                radius: *radius,
                taper_exponent: *taper_exponent,
            },
            RadialProfile::Tabulated { radii, values } => RadialProfile::Tabulated {
                radii: radii.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
        }
    }

    /// `int R(x) dx` over R^d.
    pub(crate) fn integral(&self, dim: usize) -> Result<f64> {
        let est = integrate_breaks(
            |r| self.value(r) * r.powi(dim as i32 - 1),
            &self.breakpoints(),
            Tolerance::relative(1e-13).with_abs(1e-300),
        )?;
        Ok(sphere_area(dim) * est.value)
    }

    /// Radial Fourier transform `S_{d-1} int R(r) Omega_d(k r) r^{d-1} dr`.
    ///
    /// `zero` is the transform at `k = 0`; small `k` are evaluated as
    /// `zero + int R (Omega_d - 1)` to keep relative precision when the
    /// transform vanishes at the origin.
    pub(crate) fn hankel(&self, dim: usize, k: f64, zero: f64, gl: &GaussLegendre) -> f64 {
        let k = k.abs();
        let support = self.support_radius();
        let small = k * support < 1.0;
        let breaks = self.breakpoints();
        let max_panel = if k > 0.0 {
            (core::f64::consts::PI / (2.0 * k)).min(support)
        } else {
            support
        };
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let panels = libm::ceil((b - a) / max_panel).max(1.0) as usize;
            total += gl.integrate_panels(a, b, panels, |r| {
                let kernel = if small {
                    angular_kernel_minus_one(dim, k * r)
                } else {
                    angular_kernel(dim, k * r)
                };
                self.value(r) * kernel * r.powi(dim as i32 - 1)
            });
        }
        let total = sphere_area(dim) * total;
        if small {
            zero + total
        } else {
            total
        }
    }
}
