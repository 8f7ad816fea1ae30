//! The centralizer Omega_phi on finite vectors, the twisted-sum quasinorm
//! ||(f, g)|| = ||f - Omega(g)||_2 + ||g||_2, and the numerical comparisons
//! between the w_n basis and the synthesized Orlicz norm.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::musielak::{FiniteVector, MusielakSection};
use crate::num::KahanSum;
use crate::orlicz::OrliczFunction;
use crate::rng::Rng;
use crate::table::CubicTable;

/// Range a tabulated phi covers; evaluation is linear beyond it.
pub const PHI_TABLE_RANGE: f64 = 60.0;

#[derive(Clone, Debug)]
pub enum PhiKind {
    Identity,
    Zero,
    Constant(f64),
    /// 2t + 2 log M1^{-1}(e^{-2t}), tabulated once at construction.
    FromOrlicz { table: CubicTable },
    Tabulated { table: CubicTable },
}

/// A Lipschitz function phi: R -> R with a tracked Lipschitz constant
/// (exact for the closed forms, a derived bound 2 for the interpolation
/// kind, an empirical slope bound for tabulated data).
#[derive(Clone, Debug)]
pub struct LipschitzFunction {
    pub kind: PhiKind,
    pub lipschitz: f64,
}

impl LipschitzFunction {
    pub fn identity() -> Self {
        LipschitzFunction {
            kind: PhiKind::Identity,
            lipschitz: 1.0,
        }
    }

    pub fn zero() -> Self {
        LipschitzFunction {
            kind: PhiKind::Zero,
            lipschitz: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        LipschitzFunction {
            kind: PhiKind::Constant(c),
            lipschitz: 0.0,
        }
    }

    /// Build from (x, phi(x)) samples on a uniform grid.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Argument("tabulated phi needs at least 4 points".into()));
        }
        let lo = points[0].0;
        let step = points[1].0 - points[0].0;
        if !(step > 0.0) {
            return Err(Error::Argument("phi grid must be increasing".into()));
        }
        for (i, &(x, _)) in points.iter().enumerate() {
            if (x - (lo + step * i as f64)).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(Error::Argument("phi grid must be uniform".into()));
            }
        }
        let values: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
        let mut slope: f64 = 0.0;
        for w in values.windows(2) {
            slope = slope.max(((w[1] - w[0]) / step).abs());
        }
        Ok(LipschitzFunction {
            kind: PhiKind::Tabulated {
                table: CubicTable::new(lo, step, values),
            },
            lipschitz: slope,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            PhiKind::Identity => t,
            PhiKind::Zero => 0.0,
            PhiKind::Constant(c) => *c,
            PhiKind::FromOrlicz { table } | PhiKind::Tabulated { table } => table.eval(t),
        }
    }

    pub fn literal(&self) -> String {
        match &self.kind {
            PhiKind::Identity => "identity".into(),
            PhiKind::Zero => "zero".into(),
            PhiKind::Constant(c) => format!("const:c={c}"),
            PhiKind::FromOrlicz { .. } => "from-orlicz (tabulated)".into(),
            PhiKind::Tabulated { .. } => "tabulated".into(),
        }
    }

    /// Largest |slope| between consecutive nodes of a scan grid.
    pub fn empirical_slope_bound(&self, lo: f64, hi: f64, points: usize) -> f64 {
        let step = (hi - lo) / (points - 1) as f64;
        let mut worst: f64 = 0.0;
        let mut prev = self.eval(lo);
        for i in 1..points {
            let v = self.eval(lo + step * i as f64);
            worst = worst.max(((v - prev) / step).abs());
            prev = v;
        }
        worst
    }
}

/// The interpolation-derived phi(t) = 2t + 2 log M1^{-1}(e^{-2t}), with the
/// derived Lipschitz bound 2 (log M1^{-1}(e^s) is nondecreasing and
/// 1-Lipschitz by concavity of the inverse) and an empirical slope check.
pub fn phi_from_orlicz(m1: &OrliczFunction) -> Result<LipschitzFunction> {
    let n = 4801;
    let lo = -PHI_TABLE_RANGE;
    let hi = PHI_TABLE_RANGE;
    let mut values = Vec::with_capacity(n);
    let step = (hi - lo) / (n - 1) as f64;
    for i in 0..n {
        let t = lo + step * i as f64;
        let ln_inv = m1.inverse_ln(-2.0 * t)?;
        values.push(2.0 * t + 2.0 * ln_inv);
    }
    let table = CubicTable::new(lo, step, values);
    let phi = LipschitzFunction {
        kind: PhiKind::FromOrlicz { table },
        lipschitz: 2.0,
    };
    let slope = phi.empirical_slope_bound(-40.0, 40.0, 4001);
    if slope > 2.0 + 1e-6 {
        return Err(Error::Numeric {
            point: 0.0,
            reason: format!("from-orlicz phi slope {slope} exceeds the derived bound 2"),
        });
    }
    Ok(phi)
}

/// Omega_phi(g): zero for g = 0; otherwise the homogeneous extension of
/// x(k) phi(-log |x(k)|) from the unit sphere.
pub fn omega_phi(phi: &LipschitzFunction, g: &FiniteVector) -> FiniteVector {
    let sigma = g.euclid_norm();
    if sigma == 0.0 {
        return FiniteVector::zeros(g.len());
    }
    let coords = g
        .coords
        .iter()
        .map(|&c| {
            if c == 0.0 {
                0.0
            } else {
                c * phi.eval(-(c.abs() / sigma).ln())
            }
        })
        .collect();
    FiniteVector { coords }
}

/// A pair (f, g) carrying the twisted-sum quasinorm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KPVector {
    pub f: FiniteVector,
    pub g: FiniteVector,
}

impl KPVector {
    pub fn new(f: FiniteVector, g: FiniteVector) -> Result<Self> {
        if f.len() != g.len() {
            return Err(Error::Argument("KP pair components must have equal length".into()));
        }
        Ok(KPVector { f, g })
    }

    pub fn scaled(&self, a: f64) -> Self {
        KPVector {
            f: self.f.scaled(a),
            g: self.g.scaled(a),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        KPVector {
            f: self.f.add(&other.f),
            g: self.g.add(&other.g),
        }
    }
}

/// ||(f, g)|| = ||f - Omega(g)||_2 + ||g||_2.
pub fn kp_quasinorm(phi: &LipschitzFunction, z: &KPVector) -> f64 {
    let om = omega_phi(phi, &z.g);
    let diff = z.f.add(&om.scaled(-1.0));
    diff.euclid_norm() + z.g.euclid_norm()
}

/// The w_n basis vector (phi(0) e_n, e_n).
pub fn w_basis_vector(phi: &LipschitzFunction, dim: usize, n: usize) -> KPVector {
    let e = FiniteVector::basis(dim, n);
    KPVector {
        f: e.scaled(phi.eval(0.0)),
        g: e,
    }
}

/// Largest quasinorm triangle ratio ||z + w|| / (||z|| + ||w||) over seeded
/// random pairs.
pub fn quasi_triangle_probe(
    phi: &LipschitzFunction,
    trials: usize,
    dim: usize,
    seed: u64,
) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let rand_vec = |rng: &mut Rng| FiniteVector {
            coords: (0..dim).map(|_| rng.gaussian()).collect(),
        };
        let z = KPVector {
            f: rand_vec(&mut rng),
            g: rand_vec(&mut rng),
        };
        let w = KPVector {
            f: rand_vec(&mut rng),
            g: rand_vec(&mut rng),
        };
        let ratio = kp_quasinorm(phi, &z.add(&w)) / (kp_quasinorm(phi, &z) + kp_quasinorm(phi, &w));
        worst = worst.max(ratio);
    }
    worst
}

/// Random-pair certificate for (1 + u^2)/(1 + v^2) <= 2 (1 + (u - v)^2).
pub fn inequality_53_check(samples: usize, seed: u64) -> Certificate {
    let mut cert = Certificate::new("quotient-square-inequality");
    cert.grid = format!("{samples} uniform pairs on [-1e6, 1e6]^2");
    let mut rng = Rng::new(seed);
    let ratio = |u: f64, v: f64| (1.0 + u * u) / ((1.0 + v * v) * 2.0 * (1.0 + (u - v) * (u - v)));
    for _ in 0..samples {
        let u = rng.uniform(-1e6, 1e6);
        let v = rng.uniform(-1e6, 1e6);
        cert.observe(1.0 - ratio(u, v), 0.0, || format!("(u, v) = ({u}, {v})"));
    }
    // Recorded reference points: equal arguments and the (1, 0) witness.
    cert.constant("ratio_at_u_eq_v", ratio(3.0, 3.0));
    cert.constant("ratio_at_1_0", ratio(1.0, 0.0));
    cert.observe(1.0 - ratio(1.0, 0.0), 0.0, || "(1, 0)".to_string());
    cert.finish()
}

/// The norm-comparison expression sigma + (sum |t_n|^2 [phi(-log(|t_n|/sigma))
/// - phi(0)]^2)^{1/2} attached to the w_n partial sums.
pub fn expr_51(phi: &LipschitzFunction, t: &FiniteVector) -> Result<f64> {
    if t.is_zero() {
        return Err(Error::Domain("expression undefined for t = 0".into()));
    }
    let sigma = t.euclid_norm();
    Ok(sigma + expr_51_sum(phi, &t.coords, sigma))
}

/// The square-root term of the comparison expression with an explicit
/// normalizer (used with the full-sequence sigma and prefix sums).
fn expr_51_sum(phi: &LipschitzFunction, coords: &[f64], sigma: f64) -> f64 {
    let phi0 = phi.eval(0.0);
    let mut acc = KahanSum::new();
    for &c in coords {
        if c != 0.0 {
            let d = phi.eval(-(c.abs() / sigma).ln()) - phi0;
            acc.add(c * c * d * d);
        }
    }
    acc.value().sqrt()
}

/// For each prefix N: the quasinorm of sum_{n<=N} t_n w_n against the
/// comparison expression (prefix ell_2 norm plus the (5.1)-type term with
/// the full-sequence normalizer), with the Lipschitz partial-sum bound
/// L sigma_N log(sigma / sigma_N).
pub fn partial_sum_bound_check(
    phi: &LipschitzFunction,
    t: &FiniteVector,
    prefixes: &[usize],
) -> Result<Certificate> {
    if t.coords.contains(&0.0) {
        return Err(Error::Precondition(
            "partial-sum bound requires nonzero coordinates".into(),
        ));
    }
    let mut cert = Certificate::new("partial-sum-bound");
    cert.constant("L", phi.lipschitz);
    cert.grid = format!("prefixes {prefixes:?} of length {}", t.len());
    let sigma = t.euclid_norm();
    let phi0 = phi.eval(0.0);
    let tol = 1e-8;
    for &n in prefixes {
        if n == 0 || n > t.len() {
            return Err(Error::Argument(format!("prefix {n} out of range")));
        }
        let prefix = FiniteVector {
            coords: t.coords[..n].to_vec(),
        };
        let z = KPVector {
            f: prefix.scaled(phi0),
            g: prefix.clone(),
        };
        let quasinorm = kp_quasinorm(phi, &z);
        let sigma_n = prefix.euclid_norm();
        let comparison = sigma_n + expr_51_sum(phi, &prefix.coords, sigma);
        let bound = phi.lipschitz * sigma_n * (sigma / sigma_n).ln() + tol;
        let diff = (quasinorm - comparison).abs();
        cert.observe(bound - diff, 0.0, || {
            format!("prefix {n}: |{quasinorm} - {comparison}| vs bound {bound}")
        });
        if n == t.len() {
            cert.constant("difference_at_full_length", format!("{diff:.3e}"));
        }
    }
    Ok(cert.finish())
}

/// Equivalence evidence between the w_n basis and the canonical basis of
/// the synthesized Orlicz space: the spread of the quasinorm-to-Luxemburg
/// ratio over random coefficient sequences, plus the growth of M(t)/t^2
/// toward zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub dim: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub spread: f64,
    /// M(t)/t^2 at t = 1e-8 over its value at t = 1e-1.
    pub growth_factor: f64,
}

pub fn equivalence_report(
    phi: &LipschitzFunction,
    m: &OrliczFunction,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let section = MusielakSection::uniform(m.clone(), dim as u64);
    let mut rng = Rng::new(seed);
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    let phi0 = phi.eval(0.0);
    for _ in 0..trials {
        let t = FiniteVector {
            coords: (0..dim)
                .map(|_| {
                    let v = rng.gaussian();
                    // Spread coordinate scales over several orders.
                    v * 10f64.powf(rng.uniform(-3.0, 0.0))
                })
                .collect(),
        };
        if t.is_zero() {
            continue;
        }
        let z = KPVector {
            f: t.scaled(phi0),
            g: t.clone(),
        };
        let quasinorm = kp_quasinorm(phi, &z);
        let lux = section.lux_norm(&t)?;
        if lux > 0.0 {
            let r = quasinorm / lux;
            ratio_min = ratio_min.min(r);
            ratio_max = ratio_max.max(r);
        }
    }
    let growth_factor = {
        let a = m.log_eval((1e-8f64).ln()) - 2.0 * (1e-8f64).ln();
        let b = m.log_eval((1e-1f64).ln()) - 2.0 * (1e-1f64).ln();
        (a - b).exp()
    };
    Ok(EquivalenceReport {
        trials,
        dim,
        ratio_min,
        ratio_max,
        spread: ratio_max / ratio_min,
        growth_factor,
    })
}

/// The centralizer estimate ||Omega(u g) - u Omega(g)||_2 <= c ||u||_inf for
/// unit g, probed over random multipliers; returns the worst constant seen.
pub fn centralizer_probe(phi: &LipschitzFunction, trials: usize, dim: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut g = FiniteVector {
            coords: (0..dim).map(|_| rng.gaussian()).collect(),
        };
        let n = g.euclid_norm();
        if n == 0.0 {
            continue;
        }
        g = g.scaled(1.0 / n);
        let u: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let u_inf = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if u_inf == 0.0 {
            continue;
        }
        let ug = FiniteVector {
            coords: g.coords.iter().zip(&u).map(|(&gc, &uc)| gc * uc).collect(),
        };
        let lhs = omega_phi(phi, &ug);
        let rhs = omega_phi(phi, &g);
        let diff = FiniteVector {
            coords: lhs
                .coords
                .iter()
                .zip(&rhs.coords)
                .zip(&u)
                .map(|((&a, &b), &uc)| a - uc * b)
                .collect(),
        };
        worst = worst.max(diff.euclid_norm() / u_inf);
    }
    worst
}

pub fn equivalence_report_to_json(r: &EquivalenceReport) -> Value {
    json!({
        "trials": r.trials,
        "dim": r.dim,
        "ratio_min": r.ratio_min,
        "ratio_max": r.ratio_max,
        "spread": r.spread,
        "growth_factor": r.growth_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_examples() {
        // Identity phi, g = e1: phi(-log 1) = 0.
        let phi = LipschitzFunction::identity();
        let g = FiniteVector::basis(4, 0);
        assert!(omega_phi(&phi, &g).is_zero());
        // Any phi, g = e1: phi(0) e1.
        let phi5 = LipschitzFunction::constant(5.0);
        let om = omega_phi(&phi5, &g);
        assert!((om.coords[0] - 5.0).abs() < 1e-15);
        // Identity phi, g = (e1 + e2)/sqrt(2): (log 2 / (2 sqrt 2)) (e1 + e2).
        let s = 1.0 / 2f64.sqrt();
        let g = FiniteVector::new(vec![s, s]).unwrap();
        let om = omega_phi(&LipschitzFunction::identity(), &g);
        let expected = 2f64.ln() / (2.0 * 2f64.sqrt());
        assert!((om.coords[0] - expected).abs() < 1e-15);
        assert!((om.coords[1] - expected).abs() < 1e-15);
        // Zero input.
        assert!(omega_phi(&phi, &FiniteVector::zeros(3)).is_zero());
    }

    #[test]
    fn omega_homogeneous() {
        let phi = LipschitzFunction::identity();
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let g = FiniteVector {
                coords: (0..6).map(|_| rng.gaussian()).collect(),
            };
            for a in [0.25, 3.0, -2.0] {
                let left = omega_phi(&phi, &g.scaled(a));
                let right = omega_phi(&phi, &g).scaled(a);
                for (l, r) in left.coords.iter().zip(&right.coords) {
                    assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
                }
            }
        }
    }

    #[test]
    fn quasinorm_examples() {
        let phi = LipschitzFunction::identity();
        let z = KPVector::new(FiniteVector::zeros(2), FiniteVector::basis(2, 0)).unwrap();
        assert!((kp_quasinorm(&phi, &z) - 1.0).abs() < 1e-15);
        // (f, 0): plain Euclidean norm of f.
        let z = KPVector::new(FiniteVector::new(vec![3.0, 4.0]).unwrap(), FiniteVector::zeros(2))
            .unwrap();
        assert!((kp_quasinorm(&phi, &z) - 5.0).abs() < 1e-15);
        // (0, (e1 + e2)/sqrt 2): 1 + log 2 / 2.
        let s = 1.0 / 2f64.sqrt();
        let z = KPVector::new(FiniteVector::zeros(2), FiniteVector::new(vec![s, s]).unwrap())
            .unwrap();
        let expected = 1.0 + 2f64.ln() / 2.0;
        assert!((kp_quasinorm(&phi, &z) - expected).abs() < 1e-14);
        assert!((expected - 1.346574).abs() < 1e-6);
    }

    #[test]
    fn quasinorm_homogeneity() {
        let phi = LipschitzFunction::identity();
        let mut rng = Rng::new(9);
        let z = KPVector {
            f: FiniteVector {
                coords: (0..8).map(|_| rng.gaussian()).collect(),
            },
            g: FiniteVector {
                coords: (0..8).map(|_| rng.gaussian()).collect(),
            },
        };
        let n = kp_quasinorm(&phi, &z);
        for a in [0.5, -3.0] {
            let m = kp_quasinorm(&phi, &z.scaled(a));
            assert!((m - a.abs() * n).abs() < 1e-12 * n);
        }
    }

    #[test]
    fn triangle_probe_strata() {
        // phi == 0: the space is l2 (+) l2; the quasinorm is a norm.
        let worst = quasi_triangle_probe(&LipschitzFunction::zero(), 500, 16, 42);
        assert!(worst <= 1.0 + 1e-12, "{worst}");
        // Identity phi: finite and at least 1 in the large.
        let worst = quasi_triangle_probe(&LipschitzFunction::identity(), 2000, 16, 42);
        assert!(worst.is_finite() && worst > 0.9, "{worst}");
    }

    #[test]
    fn phi_from_orlicz_closed_forms() {
        // M1 = Power(2): phi = 0. M1 = Power(4): phi = identity.
        let phi2 = phi_from_orlicz(&OrliczFunction::power(2.0).unwrap()).unwrap();
        let phi4 = phi_from_orlicz(&OrliczFunction::power(4.0).unwrap()).unwrap();
        for i in 0..100 {
            let t = -20.0 + 40.0 * i as f64 / 99.0;
            assert!(phi2.eval(t).abs() < 1e-8, "t = {t}: {}", phi2.eval(t));
            assert!((phi4.eval(t) - t).abs() < 1e-8, "t = {t}: {}", phi4.eval(t));
        }
        assert!((phi2.lipschitz - 2.0).abs() < 1e-12);
    }

    #[test]
    fn expr_51_examples() {
        let phi = LipschitzFunction::identity();
        // Single unit coordinate: phi(-log 1) - phi(0) = 0, value sigma = 1.
        let t = FiniteVector::basis(3, 0);
        assert!((expr_51(&phi, &t).unwrap() - 1.0).abs() < 1e-15);
        // Identity phi at the flat pair: matches the quasinorm example.
        let s = 1.0 / 2f64.sqrt();
        let t = FiniteVector::new(vec![s, s]).unwrap();
        assert!((expr_51(&phi, &t).unwrap() - (1.0 + 2f64.ln() / 2.0)).abs() < 1e-14);
        // Constant phi: the bracket vanishes.
        let t = FiniteVector::new(vec![0.3, -0.4, 0.05]).unwrap();
        let c = LipschitzFunction::constant(7.0);
        assert!((expr_51(&c, &t).unwrap() - t.euclid_norm()).abs() < 1e-15);
        assert!(expr_51(&phi, &FiniteVector::zeros(2)).is_err());
    }

    #[test]
    fn partial_sum_bound_examples() {
        let phi = LipschitzFunction::identity();
        let mut rng = Rng::new(11);
        let t = FiniteVector {
            coords: (0..32)
                .map(|_| {
                    let v: f64 = rng.gaussian();
                    (v.abs() + 1e-3) * v.signum()
                })
                .collect(),
        };
        let cert = partial_sum_bound_check(&phi, &t, &[4, 16, 32]).unwrap();
        assert!(cert.pass, "{cert:?}");
        // Full-length prefix: exact agreement.
        let diff: f64 = cert.constants["difference_at_full_length"].parse().unwrap();
        assert!(diff <= 1e-8);
        // Constant phi: zero difference at every prefix.
        let cert = partial_sum_bound_check(&LipschitzFunction::constant(2.0), &t, &[4, 32]).unwrap();
        assert!(cert.pass);
        // Zero coordinates rejected.
        let bad = FiniteVector::new(vec![1.0, 0.0]).unwrap();
        assert!(partial_sum_bound_check(&phi, &bad, &[2]).is_err());
    }

    #[test]
    fn inequality_53_certificate() {
        let cert = inequality_53_check(20_000, 7);
        assert!(cert.pass, "{cert:?}");
        let at_10: f64 = cert.constants["ratio_at_1_0"].parse().unwrap();
        assert!((at_10 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn centralizer_probe_finite() {
        let c = centralizer_probe(&LipschitzFunction::identity(), 300, 16, 5);
        assert!(c.is_finite() && c > 0.0 && c < 20.0, "{c}");
    }
}
