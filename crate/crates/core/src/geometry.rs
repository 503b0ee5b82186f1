//! Axis-aligned boxes and integer cell keys for spatial hashing.

use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::MAX_DIM;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        check_dim(lo.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(invalid("box corners must be finite with lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    /// The cube [-half, half]^d.
    pub fn cube(dim: usize, half: f64) -> Result<Self> {
        Self::new(alloc::vec![-half; dim], alloc::vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Grows (or, for negative `pad`, shrinks) every side by `pad`.
    pub fn padded(&self, pad: f64) -> Self {
        let lo: Vec<f64> = self.lo.iter().map(|v| v - pad).collect();
        let mut hi: Vec<f64> = self.hi.iter().map(|v| v + pad).collect();
        for (h, l) in hi.iter_mut().zip(&lo) {
            if *h < *l {
                *h = *l;
            }
        }
        Self { lo, hi }
    }
}

pub fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Integer lattice coordinates of a hash cell; unused axes stay zero.
pub type CellKey = [i32; MAX_DIM];

pub fn cell_of(x: &[f64], cell: f64) -> CellKey {
    let mut key = [0; MAX_DIM];
    for (k, v) in key.iter_mut().zip(x) {
        *k = libm::floor(v / cell) as i32;
    }
    key
}

/// The 3^d keys surrounding `key` (including itself).
pub fn neighbourhood(key: &CellKey, dim: usize) -> impl Iterator<Item = CellKey> + '_ {
    let count = 3usize.pow(dim as u32);
    (0..count).map(move |mut code| {
        let mut out = *key;
        for slot in out.iter_mut().take(dim) {
            *slot += (code % 3) as i32 - 1;
            code /= 3;
        }
        out
    })
}

pub fn distance_squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
