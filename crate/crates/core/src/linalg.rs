//! Minimal dense linear algebra for the low-dimensional geometry searches:
//! LU with partial pivoting, determinants, inverses.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub n: usize,
    /// Row-major entries.
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// (det, inverse) by Gauss-Jordan with partial pivoting.
    pub fn det_inverse(&self) -> Result<(f64, Mat)> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Mat::identity(n);
        let mut det = 1.0f64;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return Err(Error::Optimization("singular matrix".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    inv.a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            let inv_d = 1.0 / d;
            for j in 0..n {
                a[col * n + j] *= inv_d;
                inv.a[col * n + j] *= inv_d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r * n + j] -= f * a[col * n + j];
                        inv.a[r * n + j] -= f * inv.a[col * n + j];
                    }
                }
            }
        }
        Ok((det, inv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let mut m = Mat::zeros(3);
        let data = [2.0, 1.0, 0.0, -1.0, 3.0, 2.0, 0.5, 0.0, 1.0];
        m.a.copy_from_slice(&data);
        let (det, inv) = m.det_inverse().unwrap();
        // det by cofactor expansion: 2(3*1-2*0) - 1(-1*1-2*0.5) + 0 = 6 + 2 = 8
        assert!((det - 8.0).abs() < 1e-12, "{det}");
        for i in 0..3 {
            let e: Vec<f64> = (0..3).map(|j| f64::from(u8::from(i == j))).collect();
            let x = inv.matvec(&e);
            let back = m.matvec(&x);
            for j in 0..3 {
                assert!((back[j] - e[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_detected() {
        let mut m = Mat::zeros(2);
        m.a.copy_from_slice(&[1.0, 2.0, 2.0, 4.0]);
        assert!(m.det_inverse().is_err());
    }
}
