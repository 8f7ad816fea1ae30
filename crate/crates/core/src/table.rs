//! Uniform-grid cubic interpolation tables (Catmull–Rom) with linear
//! extension beyond the ends. Used for mollified functions and tabulated
//! Lipschitz data.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicTable {
    pub lo: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl CubicTable {
    pub fn new(lo: f64, step: f64, values: Vec<f64>) -> Self {
        assert!(step > 0.0 && values.len() >= 4);
        CubicTable { lo, step, values }
    }

    /// Sample `f` uniformly on [lo, hi] with `n` points.
    pub fn sample(lo: f64, hi: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        assert!(n >= 4 && hi > lo);
        let step = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|i| f(lo + step * i as f64)).collect();
        CubicTable { lo, step, values }
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.values.len() - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.lo + self.step * i as f64, v))
    }

    fn end_slope_left(&self) -> f64 {
        (self.values[1] - self.values[0]) / self.step
    }

    fn end_slope_right(&self) -> f64 {
        let n = self.values.len();
        (self.values[n - 1] - self.values[n - 2]) / self.step
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let hi = self.hi();
        if x <= self.lo {
            return self.values[0] + self.end_slope_left() * (x - self.lo);
        }
        if x >= hi {
            return self.values[n - 1] + self.end_slope_right() * (x - hi);
        }
        let s = (x - self.lo) / self.step;
        let i = (s.floor() as usize).min(n - 2);
        // Four-point Lagrange stencil (exact on cubics), shifted at ends.
        let j0 = i.saturating_sub(1).min(n - 4);
        let u = s - j0 as f64;
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        self.values[j0] * l0 + self.values[j0 + 1] * l1 + self.values[j0 + 2] * l2
            + self.values[j0 + 3] * l3
    }

    /// Pointwise map of the stored values.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CubicTable {
        CubicTable {
            lo: self.lo,
            step: self.step,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0 * x - 1.5;
        let tab = CubicTable::sample(-2.0, 2.0, 41, f);
        for i in 0..200 {
            let x = -1.9 + 3.8 * i as f64 / 199.0;
            assert!((tab.eval(x) - f(x)).abs() < 1e-10, "x = {x}");
        }
        // Smooth non-polynomial function: fourth-order accuracy.
        let g = |x: f64| (0.7 * x).sin() + 0.3 * x;
        let tab = CubicTable::sample(-3.0, 3.0, 301, g);
        for i in 0..500 {
            let x = -2.9 + 5.8 * i as f64 / 499.0;
            assert!((tab.eval(x) - g(x)).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn linear_extension_outside() {
        let tab = CubicTable::sample(0.0, 1.0, 11, |x| 3.0 * x + 1.0);
        assert!((tab.eval(-2.0) - (-5.0)).abs() < 1e-10);
        assert!((tab.eval(4.0) - 13.0).abs() < 1e-10);
    }
}
