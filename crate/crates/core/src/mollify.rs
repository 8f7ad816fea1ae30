//! Mollification of Lipschitz functions against the standard bump and the
//! synthesis of an Orlicz function t^2 (K + psi(-log t)^2) equivalent to
//! t^2 (1 + phi(-log t)^2).

use serde::{Deserialize, Serialize};

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::kalton::LipschitzFunction;
use crate::orlicz::OrliczFunction;
use crate::table::CubicTable;

/// The normalized bump exp(-1/(x(1-x))) on (0, 1), its first two
/// derivatives, and its moments.
pub struct Bump {
    norm: f64,
}

impl Bump {
    pub fn standard() -> &'static Bump {
        static BUMP: std::sync::OnceLock<Bump> = std::sync::OnceLock::new();
        BUMP.get_or_init(|| {
            let raw = |u: f64| {
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (u * (1.0 - u))).exp()
                }
            };
            let integral = adaptive_simpson(&raw, 0.0, 1.0, 1e-14, 48).expect("bump integral");
            Bump { norm: 1.0 / integral }
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        self.norm * (-1.0 / (u * (1.0 - u))).exp()
    }

    /// f'(u) = f(u) (1 - 2u) / (u(1-u))^2.
    pub fn d1(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let g = u * (1.0 - u);
        self.eval(u) * (1.0 - 2.0 * u) / (g * g)
    }

    /// f''(u) = f(u) [ ((1-2u)/g^2)^2 - 2/g^2 - 2(1-2u)^2/g^3 ], g = u(1-u).
    pub fn d2(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let g = u * (1.0 - u);
        let a = (1.0 - 2.0 * u) / (g * g);
        self.eval(u) * (a * a - 2.0 / (g * g) - 2.0 * (1.0 - 2.0 * u).powi(2) / (g * g * g))
    }

    /// First moment of the bump (between 0 and 1; 1/2 by symmetry).
    pub fn first_moment(&self) -> f64 {
        adaptive_simpson(&|u| u * self.eval(u), 0.0, 1.0, 1e-13, 48).expect("bump moment")
    }

    pub fn sup(&self) -> f64 {
        self.eval(0.5)
    }
}

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numeric {
                point: m,
                reason: "quadrature did not converge".into(),
            });
        }
        Ok(recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1)?
            + recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1)?)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, depth)
}

/// Mollification record: psi = phi * f tabulated with its first two
/// derivatives, the sup distance A, the drift infimum b, and the convexity
/// multiplier K.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MollifiedPhi {
    pub psi: CubicTable,
    pub psi1: CubicTable,
    pub psi2: CubicTable,
    pub phi_table: CubicTable,
    /// sup |psi - phi| over the grid.
    pub a_sup: f64,
    /// inf (psi'' - 3 psi') over the grid.
    pub b_inf: f64,
    /// max(1, ceil(b^2 / 4)).
    pub k_const: f64,
    /// inf of phi over the nonnegative part of the grid (the recorded shift
    /// that makes phi >= 0 where the synthesis uses it).
    pub phi_inf: f64,
    pub lipschitz: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
}

/// Convolve phi with the standard bump over [grid_lo, grid_hi] (default
/// [-40, 40], 4096 points) by adaptive quadrature; attach the quantitative
/// mollification checks.
pub fn mollify(phi: &LipschitzFunction, grid_lo: f64, grid_hi: f64, points: usize) -> Result<MollifiedPhi> {
    if !(grid_hi > grid_lo) || points < 16 {
        return Err(Error::Argument("mollification grid must be increasing with >= 16 points".into()));
    }
    let bump = Bump::standard();
    let tol = 1e-10;
    let conv = |x: f64, kernel: &dyn Fn(f64) -> f64| -> Result<f64> {
        // psi^(n)(x) = int_0^1 phi(x - u) f^(n)(u) du.
        adaptive_simpson(&|u| phi.eval(x - u) * kernel(u), 0.0, 1.0, tol, 40)
    };
    let mut psi_v = Vec::with_capacity(points);
    let mut psi1_v = Vec::with_capacity(points);
    let mut psi2_v = Vec::with_capacity(points);
    let mut phi_v = Vec::with_capacity(points);
    let step = (grid_hi - grid_lo) / (points - 1) as f64;
    for i in 0..points {
        let x = grid_lo + step * i as f64;
        psi_v.push(conv(x, &|u| bump.eval(u))?);
        psi1_v.push(conv(x, &|u| bump.d1(u))?);
        psi2_v.push(conv(x, &|u| bump.d2(u))?);
        phi_v.push(phi.eval(x));
    }
    let a_sup = psi_v
        .iter()
        .zip(&phi_v)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max);
    let b_inf = psi2_v
        .iter()
        .zip(&psi1_v)
        .map(|(p2, p1)| p2 - 3.0 * p1)
        .fold(f64::INFINITY, f64::min);
    let k_const = 1.0f64.max((b_inf * b_inf / 4.0).ceil());
    // Infimum over the nonnegative part of the range, endpoints included
    // (x = 0 need not be a grid node).
    let phi_inf = if grid_hi <= 0.0 {
        0.0
    } else {
        let scan_n = 2048;
        (0..=scan_n)
            .map(|i| phi.eval(grid_hi * i as f64 / scan_n as f64))
            .fold(f64::INFINITY, f64::min)
    };
    let m = MollifiedPhi {
        psi: CubicTable::new(grid_lo, step, psi_v),
        psi1: CubicTable::new(grid_lo, step, psi1_v),
        psi2: CubicTable::new(grid_lo, step, psi2_v),
        phi_table: CubicTable::new(grid_lo, step, phi_v),
        a_sup,
        b_inf,
        k_const,
        phi_inf,
        lipschitz: phi.lipschitz,
        grid_lo,
        grid_hi,
    };
    // Quantitative mollification checks.
    let bound_a = phi.lipschitz * bump.first_moment() + 1e-6;
    if a_sup > bound_a {
        return Err(Error::Numeric {
            point: 0.0,
            reason: format!("|psi - phi| = {a_sup} exceeds L * first moment = {bound_a}"),
        });
    }
    let slope_bound = phi.lipschitz + 1e-6;
    if m.psi1.values.iter().any(|v| v.abs() > slope_bound) {
        return Err(Error::Numeric {
            point: 0.0,
            reason: format!("|psi'| exceeds the Lipschitz bound {slope_bound}"),
        });
    }
    Ok(m)
}

pub fn mollify_default(phi: &LipschitzFunction) -> Result<MollifiedPhi> {
    mollify(phi, -40.0, 40.0, 4096)
}

/// Synthesis output: the Orlicz function t^2 (K + psi~(-log t)^2) for the
/// shifted psi~, the equivalence constants, and the convexity/sandwich
/// certificate.
pub struct Synthesis {
    pub m: OrliczFunction,
    pub c_lower: f64,
    pub c_upper: f64,
    pub shift: f64,
    pub certificate: Certificate,
}

/// Build the Orlicz function certified equivalent to
/// t^2 (1 + phi~(-log t)^2), phi~ = phi - inf phi on the working range:
/// K = max(1, ceil(b^2/4)), c = 1/(2(1+A^2)), C = 2K(1+A^2).
pub fn synthesize_orlicz(moll: &MollifiedPhi) -> Result<Synthesis> {
    let shift = if moll.phi_inf.is_finite() { moll.phi_inf } else { 0.0 };
    let psi_shifted = moll.psi.map_values(|v| v - shift);
    let k = moll.k_const;
    let m = OrliczFunction::synthesized(psi_shifted, k);
    let a2 = 1.0 + moll.a_sup * moll.a_sup;
    let c_lower = 1.0 / (2.0 * a2);
    let c_upper = 2.0 * k * a2;

    let mut cert = Certificate::new("synthesis-sandwich");
    cert.constant("K", k);
    cert.constant("A", moll.a_sup);
    cert.constant("b", moll.b_inf);
    cert.constant("c", c_lower);
    cert.constant("C", c_upper);
    cert.constant("shift", shift);
    let grid = crate::grid::LogGrid::new(1e-12, 1.0, 200);
    cert.grid = grid.describe();
    // Sandwich with these constants:
    //   c <= M(t) / (t^2 (1 + phi~(-log t)^2)) <= C,
    // margins in ln units.
    for &u in &grid.ln_values() {
        let ln_m = m.log_eval(u);
        let phi_t = moll.phi_table.eval(-u) - shift;
        let ln_target = 2.0 * u + (1.0 + phi_t * phi_t).ln();
        cert.observe(
            ln_m - (c_lower.ln() + ln_target),
            (c_upper.ln() + ln_target) - ln_m,
            || format!("t = {:.6e}", u.exp()),
        );
    }
    let convexity = m.convexity_certificate(1e-12, 1.0, 200);
    if !convexity.pass {
        return Err(Error::Synthesis(format!(
            "synthesized function failed convexity: worst margin {:.3e} ({:?})",
            convexity.worst_lower_margin, convexity.witness
        )));
    }
    let cert = Certificate::merge_all("synthesis", vec![cert.finish(), convexity]);
    Ok(Synthesis {
        m,
        c_lower,
        c_upper,
        shift,
        certificate: cert,
    })
}
