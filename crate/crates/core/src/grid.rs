//! Logarithmic sampling grids used by certificates and index estimators.

use serde::{Deserialize, Serialize};

/// A geometric grid on `[lo, hi]`, described by its endpoints and size.
/// Certificates embed the description so a verification run is replayable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        assert!(lo > 0.0 && hi > lo && points >= 2);
        LogGrid { lo, hi, points }
    }

    /// Grid values (ascending, endpoints included).
    pub fn values(&self) -> Vec<f64> {
        self.ln_values().into_iter().map(f64::exp).collect()
    }

    /// ln of the grid values.
    pub fn ln_values(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let n = self.points;
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn describe(&self) -> String {
        format!("log-grid [{:.3e}, {:.3e}] x {}", self.lo, self.hi, self.points)
    }
}

/// Grid specification for the (lambda, t) sweeps of index estimation and
/// band verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambda: LogGrid,
    pub t: LogGrid,
}

impl GridSpec {
    pub fn new(lambda: LogGrid, t: LogGrid) -> Self {
        GridSpec { lambda, t }
    }

    /// Default sweep for index estimation: both axes logarithmic over
    /// [1e-48, 1] with 64 points. The depth exists so that logarithmic
    /// corrections have slowed enough for the growth detector to tell them
    /// from genuine power mismatches.
    pub fn indices_default() -> Self {
        GridSpec {
            lambda: LogGrid::new(1e-48, 1.0, 64),
            t: LogGrid::new(1e-48, 1.0, 64),
        }
    }

    /// Default band-verification sweep: 200 lambda points on [1e-8, 1].
    pub fn band_default(t_lo: f64) -> Self {
        GridSpec {
            lambda: LogGrid::new(1e-8, 1.0, 200),
            t: LogGrid::new(t_lo, 1.0, 50),
        }
    }

    pub fn describe(&self) -> String {
        format!("lambda {} / t {}", self.lambda.describe(), self.t.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = LogGrid::new(1e-8, 1.0, 5);
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert!((v[0] - 1e-8).abs() < 1e-20);
        assert!((v[4] - 1.0).abs() < 1e-15);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }
}
