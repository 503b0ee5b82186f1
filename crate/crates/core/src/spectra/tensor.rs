//! Separable triangular covariance `v * prod_i (1 - |x_i| / L)_+`.

use num_traits::Float;
use crate::error::{invalid, Result};
use crate::math::GaussLegendre;
use crate::quad::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TensorTriangular {
    pub(crate) dim: usize,
    pub(crate) variance: f64,
    pub(crate) scale: f64,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl TensorTriangular {
    pub(crate) fn new(dim: usize, variance: f64, scale: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) || !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("triangular variance and scale must be positive"));
        }
        Ok(Self { dim, variance, scale })
    }

    pub(crate) fn support_radius(&self) -> f64 {
        self.scale * (self.dim as f64).sqrt()
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.variance
            * x.iter()
                .map(|v| (1.0 - v.abs() / self.scale).max(0.0))
                .product::<f64>()
    }

    pub(crate) fn spectrum(&self, xi: &[f64]) -> f64 {
        self.variance * xi.iter().map(|&k| self.axis_spectrum(k)).product::<f64>()
    }

    /// `L sinc^2(L k / 2)`.
    pub(crate) fn axis_spectrum(&self, k: f64) -> f64 {
        let z = 0.5 * self.scale * k;
        if z.abs() < 1e-8 {
            return self.scale;
        }
        let s = libm::sin(z) / z;
        self.scale * s * s
    }

    pub(crate) fn r_hat_zero(&self) -> f64 {
        self.variance * self.scale.powi(self.dim as i32)
    }

    /// `int (1 - |x|/L)_+ q_u(x) dx` in one dimension.
    pub(crate) fn axis_heat(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        let a = self.scale / u.sqrt();
        if a < 1e-3 {
            // Series keeps the difference accurate for very long times.
            let a2 = a * a;
            return INV_SQRT_2PI * a * (1.0 - a2 / 12.0 + a2 * a2 / 160.0);
        }
        let mass = libm::erf(a / core::f64::consts::SQRT_2);
        // 2 s / L * (phi(0) - phi(a)) with s = L / a.
        let tail = 2.0 / a * INV_SQRT_2PI * -libm::expm1(-0.5 * a * a);
        mass - tail
    }

    /// `E R(B_u) = int R q_u`.
    pub(crate) fn heat_moment(&self, u: f64) -> f64 {
        self.variance * self.axis_heat(u).powi(self.dim as i32)
    }

    /// `2 int_0^inf E R(B_u) du`, finite for d >= 3.
    pub(crate) fn time_integral(&self) -> Result<f64> {
        let d = self.dim as f64;
        let l2 = self.scale * self.scale;
        let (u_min, u_max) = (1e-10 * l2, 1e8 * l2);
        let body = integrate(
            |s| {
                let u = libm::exp(s);
                self.heat_moment(u) * u
            },
            libm::log(u_min),
            libm::log(u_max),
            Tolerance::relative(1e-13),
        )?;
        let head = u_min * 0.5 * (self.variance + self.heat_moment(u_min));
        // axis_heat(u) ~ L / sqrt(2 pi u) (1 - L^2 / (12 u)) for large u.
        let c = self.variance * libm::pow(self.scale * INV_SQRT_2PI, d);
        let tail = c
            * (libm::pow(u_max, 1.0 - d / 2.0) / (d / 2.0 - 1.0)
                - d * l2 / 12.0 * libm::pow(u_max, -d / 2.0) / (d / 2.0));
        Ok(2.0 * (head + body.value + tail))
    }

    /// `int R^(xi) |xi|^{-2} dxi` through `|xi|^{-2} = int_0^inf exp(-tau |xi|^2) dtau`,
    /// with each factor `int L sinc^2(L k / 2) exp(-tau k^2) dk` done in frequency space.
    pub(crate) fn schwinger_integral(&self) -> Result<f64> {
        let d = self.dim as f64;
        let l = self.scale;
        let l2 = l * l;
        let gl = GaussLegendre::new(16);
        let (tau_min, tau_max) = (1e-6 * l2, 1e6 * l2);
        let factor = |tau: f64| -> f64 {
            // Gaussian cutoff at exp(-46).
            let cutoff = (46.0 / tau).sqrt();
            let panel = (core::f64::consts::PI / l).min(cutoff);
            let panels = libm::ceil(cutoff / panel) as usize;
            2.0 * gl.integrate_panels(0.0, cutoff, panels, |k| {
                self.axis_spectrum(k) * libm::exp(-tau * k * k)
            })
        };
        let body = integrate(
            |s| {
                let tau = libm::exp(s);
                self.variance * factor(tau).powi(self.dim as i32) * tau
            },
            libm::log(tau_min),
            libm::log(tau_max),
            Tolerance::relative(1e-12),
        )?;
        // Near tau = 0 the factor tends to int R^_1 = 2 pi.
        let two_pi = 2.0 * core::f64::consts::PI;
        let head = tau_min * 0.5 * self.variance * (two_pi.powi(self.dim as i32) + factor(tau_min).powi(self.dim as i32));
        // Laplace expansion: factor ~ L sqrt(pi / tau) (1 - L^2 / (24 tau)).
        let c = self.variance * libm::pow(l * core::f64::consts::PI.sqrt(), d);
        let tail = c
            * (libm::pow(tau_max, 1.0 - d / 2.0) / (d / 2.0 - 1.0)
                - d * l2 / 24.0 * libm::pow(tau_max, -d / 2.0) / (d / 2.0));
        Ok(head + body.value + tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_breaks;
    use approx::assert_relative_eq;

    #[test]
    fn axis_heat_matches_quadrature() {
        let t = TensorTriangular::new(1, 1.0, 1.3).unwrap();
        for &u in &[1e-4, 0.1, 1.0, 50.0, 1e7] {
            let s = u.sqrt();
            let q = |x: f64| (1.0 - x.abs() / 1.3).max(0.0) * libm::exp(-x * x / (2.0 * u)) / (s * (2.0 * core::f64::consts::PI).sqrt());
            let est = integrate_breaks(q, &[-1.3, 0.0, 1.3], Tolerance::relative(1e-13)).unwrap();
            assert_relative_eq!(t.axis_heat(u), est.value, max_relative = 1e-9);
        }
    }

    #[test]
    fn routes_agree_in_three_dimensions() {
        let t = TensorTriangular::new(3, 1.0, 1.0).unwrap();
        let real = t.time_integral().unwrap();
        let spectral = t.schwinger_integral().unwrap();
        let two_pi3 = (2.0 * core::f64::consts::PI).powi(3);
        assert_relative_eq!(real, 4.0 / two_pi3 * spectral, max_relative = 1e-8);
    }
}
