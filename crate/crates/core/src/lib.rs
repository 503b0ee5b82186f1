//! Brownian motion in Gaussian and Poisson random scenery.
//!
//! Covariance models and their limit constants, exact field samplers,
//! Brownian paths and local times, the rescaled occupation functional,
//! quadrature oracles for its finite-`n` moments, and the statistical
//! tests that compare the two. Everything here is `no_std` + `alloc`.

#![no_std]
// `num_traits::Float` goes unused when a dependency links std.
#![allow(unused_imports)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod brownian;
pub mod error;
pub mod fft;
pub mod functional;
pub mod gaussian_field;
pub mod geometry;
pub mod math;
pub mod oracles;
pub mod poisson_field;
pub mod quad;
pub mod rng;
pub mod spectra;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};
