//! Musielak–Orlicz sections and the Luxemburg norm on finite vectors.
//!
//! The norm solve runs in log coordinates: the modular comparison
//! `sum_i M_i(|x_i| / rho) <= 1` becomes `ln-modular <= 0`, which stays
//! finite even for the integer-weight constructions whose function values
//! overflow any fixed-precision range.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::num::{KahanSum, LnSum};
use crate::orlicz::OrliczFunction;

pub const TOL_NORM: f64 = 1e-12;
pub const TOL_CLAIM: f64 = 1e-8;

/// A finite real vector (dense coordinates).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteVector {
    pub coords: Vec<f64>,
}

impl FiniteVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("vector entries must be finite".into()));
        }
        Ok(FiniteVector { coords })
    }

    pub fn zeros(n: usize) -> Self {
        FiniteVector { coords: vec![0.0; n] }
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.coords[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn euclid_norm(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &c in &self.coords {
            acc.add(c * c);
        }
        acc.value().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        FiniteVector {
            coords: self.coords.iter().map(|&c| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        FiniteVector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

/// A finite Musielak–Orlicz section: functions with multiplicities, in order.
#[derive(Clone, Debug)]
pub struct MusielakSection {
    terms: Vec<(OrliczFunction, BigUint)>,
    /// Cumulative multiplicities saturated to u128 for coordinate lookup;
    /// dense vectors can never address past that range anyway.
    cumulative: Vec<u128>,
    total_dim: BigUint,
    lemma32_ready: bool,
    uniform: bool,
}

impl MusielakSection {
    pub fn new(terms: Vec<(OrliczFunction, u64)>) -> Result<Self> {
        Self::from_big(
            terms
                .into_iter()
                .map(|(f, m)| (f, BigUint::from(m)))
                .collect(),
        )
    }

    pub fn from_big(terms: Vec<(OrliczFunction, BigUint)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Argument("section needs at least one term".into()));
        }
        if terms.iter().any(|(_, m)| m.is_zero()) {
            return Err(Error::Argument("multiplicities must be positive".into()));
        }
        let mut cumulative = Vec::with_capacity(terms.len());
        let mut acc: u128 = 0;
        let mut total = BigUint::zero();
        for (_, m) in &terms {
            total += m;
            acc = acc.saturating_add(m.to_u128().unwrap_or(u128::MAX));
            cumulative.push(acc);
        }
        let uniform = terms.len() == 1;
        Ok(MusielakSection {
            terms,
            cumulative,
            total_dim: total,
            lemma32_ready: false,
            uniform,
        })
    }

    /// All coordinates carry the same function.
    pub fn uniform(m: OrliczFunction, dim: u64) -> Self {
        let mut s = Self::new(vec![(m, dim)]).expect("positive dim");
        s.uniform = true;
        s
    }

    /// Mark the section lemma32-ready, verifying M_i(1) >= 1 for every term.
    /// Functions pinned to unit value by a solve carry ~1e-12 noise, hence
    /// the tolerance.
    pub fn into_lemma32_ready(mut self) -> Result<Self> {
        for (f, _) in &self.terms {
            let v = f.log_eval(0.0);
            if !(v >= -1e-9) {
                return Err(Error::Precondition(format!(
                    "lemma32-ready requires M_i(1) >= 1; found M(1) = {:.6e}",
                    v.exp()
                )));
            }
        }
        self.lemma32_ready = true;
        Ok(self)
    }

    pub fn is_lemma32_ready(&self) -> bool {
        self.lemma32_ready
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform || self.terms.len() == 1
    }

    pub fn total_dim(&self) -> &BigUint {
        &self.total_dim
    }

    pub fn terms(&self) -> &[(OrliczFunction, BigUint)] {
        &self.terms
    }

    /// The function attached to coordinate `i` (0-based).
    pub fn function_at(&self, i: u128) -> &OrliczFunction {
        let idx = match self.cumulative.binary_search_by(|c| c.cmp(&(i + 1))) {
            Ok(j) => j,
            Err(j) => j,
        };
        &self.terms[idx.min(self.terms.len() - 1)].0
    }

    /// The single function of a uniform section.
    pub fn single_function(&self) -> Option<&OrliczFunction> {
        if self.is_uniform() {
            Some(&self.terms[0].0)
        } else {
            None
        }
    }

    /// sum_i M_i(|x_i| / rho), compensated. May overflow to +inf for the
    /// astronomically scaled constructions; use `ln_modular` there.
    pub fn modular(&self, x: &FiniteVector, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::Argument(format!("rho must be positive, got {rho}")));
        }
        let mut acc = KahanSum::new();
        for (i, &c) in x.coords.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc.add(self.function_at(i as u128).eval(c.abs() / rho)?);
        }
        Ok(acc.value())
    }

    /// ln of the modular at ln rho; -inf for the zero vector.
    pub fn ln_modular(&self, x: &FiniteVector, ln_rho: f64) -> f64 {
        let mut acc = LnSum::new();
        for (i, &c) in x.coords.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc.add_ln(self.function_at(i as u128).log_eval(c.abs().ln() - ln_rho));
        }
        acc.ln_value()
    }

    /// Luxemburg norm by bracket doubling and bisection in ln rho.
    pub fn lux_norm(&self, x: &FiniteVector) -> Result<f64> {
        Ok(match self.ln_lux_norm(x)? {
            Some(ln) => ln.exp(),
            None => 0.0,
        })
    }

    /// ln of the Luxemburg norm; None for the zero vector.
    pub fn ln_lux_norm(&self, x: &FiniteVector) -> Result<Option<f64>> {
        if x.is_zero() {
            return Ok(None);
        }
        if x.len() as u128 > *self.cumulative.last().unwrap() {
            return Err(Error::Argument(format!(
                "vector length {} exceeds section dimension",
                x.len()
            )));
        }
        let g = |ln_rho: f64| self.ln_modular(x, ln_rho);
        // Start at the sup norm: arguments are then <= 1.
        let ln_sup = x
            .coords
            .iter()
            .filter(|c| **c != 0.0)
            .map(|c| c.abs().ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut lo;
        let mut hi;
        let g0 = g(ln_sup);
        if g0 > 0.0 {
            lo = ln_sup;
            hi = ln_sup + 1.0;
            let mut step = 1.0;
            let mut prev = g0;
            while g(hi) > 0.0 {
                let cur = g(hi);
                debug_assert!(cur <= prev + 1e-9, "modular must be nonincreasing in rho");
                prev = cur;
                step *= 2.0;
                hi += step;
                if hi > 5.0e6 {
                    return Err(Error::Numeric {
                        point: hi,
                        reason: "norm bracket exceeded ln-domain".into(),
                    });
                }
            }
        } else {
            hi = ln_sup;
            lo = ln_sup - 1.0;
            let mut step = 1.0;
            while g(lo) <= 0.0 {
                step *= 2.0;
                lo -= step;
                if lo < -5.0e6 {
                    return Err(Error::Numeric {
                        point: lo,
                        reason: "norm bracket exceeded ln-domain".into(),
                    });
                }
            }
        }
        // Bisection: modular is nonincreasing in rho, so the sign of g
        // brackets the unit-modular crossing.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 0.1 * TOL_NORM {
                break;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// Luxemburg norm of the tail: coordinates before `start_index`
    /// (1-based) zeroed.
    pub fn tail_norm(&self, x: &FiniteVector, start_index: usize) -> Result<f64> {
        if start_index < 1 || start_index > x.len() + 1 {
            return Err(Error::Argument(format!(
                "start_index {start_index} out of range 1..={}",
                x.len() + 1
            )));
        }
        let mut tail = x.clone();
        for c in tail.coords.iter_mut().take(start_index - 1) {
            *c = 0.0;
        }
        self.lux_norm(&tail)
    }

    /// The unit-modular identity of norm-one vectors: asserts
    /// |sum_i M_i(|x_i|) - 1| <= 1e-8 and max |x_i| <= 1 (+1e-9).
    pub fn unit_modular_check(&self, x: &FiniteVector) -> Certificate {
        let mut cert = Certificate::new("unit-modular");
        cert.constant("tol_claim", TOL_CLAIM);
        if !self.lemma32_ready {
            return Certificate::not_applicable("unit-modular", "section is not lemma32-ready");
        }
        let norm = match self.lux_norm(x) {
            Ok(n) => n,
            Err(e) => return Certificate::not_applicable("unit-modular", e.to_string()),
        };
        if (norm - 1.0).abs() > 1e3 * TOL_NORM {
            return Certificate::not_applicable(
                "unit-modular",
                format!("vector norm {norm} is not 1"),
            );
        }
        let modular = self.ln_modular(x, 0.0).exp();
        let max_coord = x.coords.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        cert.constant("modular", format!("{modular:.12}"));
        cert.constant("max_coordinate", format!("{max_coord:.12}"));
        cert.observe(
            TOL_CLAIM - (modular - 1.0).abs(),
            1.0 + 1e-9 - max_coord,
            || format!("modular = {modular}, max coordinate = {max_coord}"),
        );
        cert.finish()
    }
}
