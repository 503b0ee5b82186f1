//! Limit constants and their two independent quadrature routes.

use num_traits::Float;
use alloc::format;

use super::{CovarianceModel, ModelKind};
use crate::error::{Error, Result};
use crate::functional::ScalingMode;
use crate::math::{gamma, sphere_area};
use crate::quad::{integrate, integrate_breaks, Tolerance};

/// Relative agreement demanded of the spectral and real-space routes.
pub const SIGMA_CROSS_TOLERANCE: f64 = 1e-6;
/// Relative size of the neglected spectral tail.
const TAIL_TOLERANCE: f64 = 1e-9;

/// `sigma^2` computed in frequency space and in real space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRoutes {
    pub spectral: f64,
    pub real_space: f64,
}

impl SigmaRoutes {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.spectral.abs().max(self.real_space.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.spectral - self.real_space).abs() / scale
        }
    }
}

/// Both evaluations of `4 (2 pi)^{-d} int R^(xi) |xi|^{-2} dxi`.
///
/// Valid for d >= 3, and for d in {1, 2} when `R^(0) = 0`.
pub fn sigma_routes(model: &CovarianceModel) -> Result<SigmaRoutes> {
    let d = model.dim();
    if d <= 2 && !model.is_degenerate() {
        return Err(Error::InvalidMode {
            dim: d,
            reason: "the |xi|^-2 integral diverges unless R^(0) = 0".into(),
        });
    }
    if model.variance() == 0.0 && model.support_radius() == 0.0 {
        return Ok(SigmaRoutes {
            spectral: 0.0,
            real_space: 0.0,
        });
    }
    let prefactor = 4.0 * libm::pow(2.0 * core::f64::consts::PI, -(d as f64));
    match &model.kind {
        ModelKind::Tensor(t) => Ok(SigmaRoutes {
            spectral: prefactor * t.schwinger_integral()?,
            real_space: t.time_integral()?,
        }),
        _ => Ok(SigmaRoutes {
            spectral: prefactor * spectral_inverse_square(model)?,
            real_space: real_space_sigma_squared(model)?,
        }),
    }
}

/// `sigma_d` for the requested scaling regime.
pub fn sigma_limit(model: &CovarianceModel, dim: usize, mode: ScalingMode) -> Result<f64> {
    if dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: dim,
        });
    }
    let sigma_squared = match mode {
        ScalingMode::Nondegenerate => match dim {
            1 | 2 if model.is_degenerate() => {
                return Err(Error::InvalidMode {
                    dim,
                    reason: "R^(0) = 0 requires the degenerate mode".into(),
                })
            }
            1 => model.r_hat_zero(),
            2 => model.r_hat_zero() / core::f64::consts::PI,
            _ => cross_validated(model)?,
        },
        ScalingMode::Degenerate => {
            if dim >= 3 {
                return Err(Error::InvalidMode {
                    dim,
                    reason: "the degenerate mode exists only for d = 1, 2".into(),
                });
            }
            if !model.is_degenerate() {
                return Err(Error::InvalidMode {
                    dim,
                    reason: format!("degenerate mode requires R^(0) = 0, found {:e}", model.r_hat_zero()),
                });
            }
            if model.variance() == 0.0 {
                return Ok(0.0);
            }
            let alpha = admissibility_exponent(model);
            let threshold = if dim == 1 { 1.0 } else { 0.0 };
            if !(alpha > threshold) {
                return Err(Error::NonIntegrable { alpha });
            }
            cross_validated(model)?
        }
    };
    Ok(sigma_squared.max(0.0).sqrt())
}

fn cross_validated(model: &CovarianceModel) -> Result<f64> {
    let routes = sigma_routes(model)?;
    if routes.relative_gap() > SIGMA_CROSS_TOLERANCE {
        return Err(Error::CrossValidation {
            spectral: routes.spectral,
            real_space: routes.real_space,
        });
    }
    Ok(routes.spectral)
}

/// Exponent `alpha` in `R^(xi) ~ |xi|^alpha`, fitted on `|xi|` in [1e-3, 1e-2].
pub fn admissibility_exponent(model: &CovarianceModel) -> f64 {
    let points = 11;
    let mut xs = alloc::vec::Vec::with_capacity(points);
    let mut ys = alloc::vec::Vec::with_capacity(points);
    for i in 0..points {
        let k = libm::pow(10.0, -3.0 + i as f64 / (points - 1) as f64);
        let value = match &model.kind {
            ModelKind::Tensor(t) => {
                let mut xi = alloc::vec![0.0; model.dim()];
                xi[0] = k;
                t.spectrum(&xi)
            }
            _ => model.spectral_radial_mean(k),
        };
        xs.push(libm::log(k));
        ys.push(libm::log(value.abs().max(1e-300)));
    }
    crate::math::linear_fit(&xs, &ys).0
}

/// `int R^(xi) |xi|^{-2} dxi = S_{d-1} int_0^inf F(k) k^{d-3} dk` over doubling panels.
fn spectral_inverse_square(model: &CovarianceModel) -> Result<f64> {
    let d = model.dim();
    let rho = model.support_radius();
    let power = d as i32 - 3;
    let integrand = |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        model.spectral_radial_mean(k) * k.powi(power)
    };
    let tol = Tolerance::relative(1e-11).with_abs(1e-300);
    let mut edge = 16.0 / rho;
    let mut total = integrate_breaks(integrand, &[0.0, 0.25 / rho, 1.0 / rho, 4.0 / rho, edge], tol)?.value;
    let mut history = [f64::INFINITY; 2];
    let limit = libm::ldexp(1.0, 40) / rho;
    loop {
        let panel = integrate(integrand, edge, 2.0 * edge, tol.with_abs(1e-14 * total.abs()))?.value;
        total += panel;
        edge *= 2.0;
        let size = panel.abs();
        let ratio = (size / history[1]).max(history[1] / history[0]).min(0.99);
        history = [history[1], size];
        let tail = if ratio.is_finite() { size * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if history[0] < 1e-8 * total.abs() && tail < TAIL_TOLERANCE * total.abs() {
            break;
        }
        if edge > limit {
            return Err(Error::Quadrature {
                value: total,
                error: tail,
            });
        }
    }
    Ok(sphere_area(d) * total)
}

/// Real-space form of `sigma^2`:
/// `-2 int R |x|` (d = 1), `-(2/pi) int R ln|x|` (d = 2),
/// `pi^{-d/2} Gamma(d/2 - 1) int R |x|^{2-d}` (d >= 3).
fn real_space_sigma_squared(model: &CovarianceModel) -> Result<f64> {
    let d = model.dim();
    let kernel = |r: f64| -> f64 {
        if d == 2 {
            r * libm::log(r)
        } else {
            r
        }
    };
    let breaks = model.radial_breakpoints();
    let est = integrate_breaks(
        |r| if r <= 0.0 { 0.0 } else { model.radial_mean(r) * kernel(r) },
        &breaks,
        Tolerance::relative(1e-12).with_abs(1e-300),
    )?;
    // kernel(r) already carries the Jacobian r^{d-1}.
    let integral = sphere_area(d) * est.value;
    Ok(match d {
        1 => -2.0 * integral,
        2 => -2.0 / core::f64::consts::PI * integral,
        _ => libm::pow(core::f64::consts::PI, -(d as f64) / 2.0) * gamma(d as f64 / 2.0 - 1.0) * integral,
    })
}
