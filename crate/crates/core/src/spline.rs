//! Clamped cubic spline on a uniform grid.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct UniformSpline {
    start: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSpline {
    /// Spline through `values` at `start + i * step` with prescribed end slopes.
    pub fn clamped(start: f64, step: f64, values: Vec<f64>, slope_start: f64, slope_end: f64) -> Self {
        let n = values.len();
        assert!(n >= 2, "spline needs at least two knots");
        let h = step;
        // Tridiagonal system for the second derivatives (Thomas algorithm).
        let mut diag = vec![4.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0;
        diag[n - 1] = 2.0;
        rhs[0] = 6.0 / h * ((values[1] - values[0]) / h - slope_start);
        rhs[n - 1] = 6.0 / h * (slope_end - (values[n - 1] - values[n - 2]) / h);
        for i in 1..n - 1 {
            rhs[i] = 6.0 / (h * h) * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
        }
        for i in 1..n {
            let factor = 1.0 / diag[i - 1];
            diag[i] -= factor;
            rhs[i] -= factor * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - second[i + 1]) / diag[i];
        }
        Self {
            start,
            step,
            values,
            second,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    /// Evaluates inside the knot range; clamps outside it.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = ((x - self.start) / self.step).clamp(0.0, last as f64);
        let i = (pos as usize).min(last - 1);
        let t = pos - i as f64;
        let u = 1.0 - t;
        let h2 = self.step * self.step / 6.0;
        u * self.values[i]
            + t * self.values[i + 1]
            + h2 * ((u * u * u - u) * self.second[i] + (t * t * t - t) * self.second[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_matching_slopes() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let values: Vec<f64> = (0..=20).map(|i| f(i as f64 * 0.1)).collect();
        let s = UniformSpline::clamped(0.0, 0.1, values, df(0.0), df(2.0));
        for k in 0..=200 {
            let x = k as f64 * 0.01;
            assert!((s.eval(x) - f(x)).abs() < 1e-12, "x={x}");
        }
        assert!((s.end() - 2.0).abs() < 1e-15);
    }
}
