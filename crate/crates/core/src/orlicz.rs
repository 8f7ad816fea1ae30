//! Representations of Orlicz functions and the scalar calculus on them.
//!
//! Every kind evaluates through `log_eval`, which maps ln t to ln M(t).
//! The weighted-dilation constructions produce values far outside the
//! double range, so the logarithmic form is the primitive and plain `eval`
//! is a convenience wrapper that may overflow to infinity.
//!
//! Functions such as t^2 |log t|^alpha are convex only near zero; those
//! kinds carry a cutoff and continue past it with the tangent line at the
//! cutoff, which preserves convexity and monotonicity while leaving the
//! germ at zero untouched.

use num_rational::Ratio;

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::num::{ratio_ln, ratio_to_f64, KahanSum, LnSum};
use crate::table::CubicTable;

const LN_DOMAIN_MIN: f64 = -5.0e6;
const LN_DOMAIN_MAX: f64 = 1.5e3;

/// Tangent-line continuation past a cutoff: value and slope of the native
/// formula at the cutoff point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentExt {
    pub ln_eps: f64,
    pub value: f64,
    pub slope: f64,
}

impl TangentExt {
    fn ln_eval(&self, u: f64) -> f64 {
        let eps = self.ln_eps.exp();
        let c0 = self.value - self.slope * eps;
        if u < 700.0 {
            (c0 + self.slope * u.exp()).ln()
        } else {
            // c0 is negligible against slope * e^u at this magnitude.
            self.slope.ln() + u
        }
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    /// t^p, p >= 1.
    Power { p: f64 },
    /// t^2 |log t|^alpha on (0, cutoff], tangent line beyond.
    PowerLog { alpha: f64, cutoff: TangentExt },
    /// Finite weighted sum of dilates: sum_j w_j * base(lambda_j t).
    DilationSum {
        base: Box<OrliczFunction>,
        terms: Vec<DilationTerm>,
    },
    /// The two-sided geometric family sum_{r=0}^{2R} kappa^{|r-R|} tau^{-2r} base(tau^r t).
    GeometricSum {
        base: Box<OrliczFunction>,
        tau: Ratio<u64>,
        kappa: Ratio<u64>,
        big_r: u32,
    },
    /// t^2 (K + psi(-log t)^2) for a tabulated smooth psi.
    Synthesized { psi: CubicTable, k_const: f64 },
    /// Piecewise log-log-linear data table: nodes (ln t, ln M) ascending,
    /// tangent line beyond the last node, domain error below the first.
    Tabulated {
        ln_ts: Vec<f64>,
        ln_ms: Vec<f64>,
        cutoff: TangentExt,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationTerm {
    pub lambda: f64,
    pub ln_lambda: f64,
    /// May be infinite when the integer multiplicity exceeds f64 range;
    /// `ln_weight` is always finite and is what evaluation uses.
    pub weight: f64,
    pub ln_weight: f64,
}

#[derive(Clone, Debug)]
pub struct OrliczFunction {
    pub kind: Kind,
    /// ln of the optional scalar normalization multiplier (0 = none).
    pub ln_scale: f64,
    /// ln of an optional argument dilation: evaluates base at e^{shift} t.
    /// Argument dilation rescales the Luxemburg norm uniformly, so sections
    /// keep their Banach-Mazur distances.
    pub arg_ln_shift: f64,
}

impl OrliczFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Argument(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(OrliczFunction {
            kind: Kind::Power { p },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        })
    }

    /// t^2 |log t|^alpha with the adaptive cutoff: the largest dyadic
    /// eps <= 1/4 below which the second derivative stays nonnegative,
    /// then the tangent line.
    pub fn power_log(alpha: f64) -> Result<Self> {
        Self::power_log_with_cutoff(alpha, None)
    }

    pub fn power_log_with_cutoff(alpha: f64, requested: Option<f64>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Argument("powerlog alpha must be finite".into()));
        }
        if alpha == 0.0 {
            return Self::power(2.0);
        }
        let eps = match requested {
            Some(e) => {
                if !(e > 0.0 && e <= 1.0) {
                    return Err(Error::Argument(format!("cutoff must lie in (0,1], got {e}")));
                }
                if alpha > 0.0 && e > powerlog_convexity_bound(alpha) {
                    return Err(Error::Domain(format!(
                        "t^2|log t|^{alpha} is not convex on (0, {e}]"
                    )));
                }
                e
            }
            None => {
                let bound = if alpha > 0.0 {
                    powerlog_convexity_bound(alpha)
                } else {
                    0.25
                };
                let mut eps = 0.25f64;
                let mut found = None;
                for _ in 0..20 {
                    if eps <= bound * (1.0 + 1e-12) {
                        found = Some(eps);
                        break;
                    }
                    eps *= 0.5;
                }
                found.ok_or_else(|| {
                    Error::Domain(format!("no dyadic cutoff <= 1/4 for alpha = {alpha}"))
                })?
            }
        };
        let x = -eps.ln();
        let value = eps * eps * x.powf(alpha);
        // d/dt [t^2 (-ln t)^alpha] = t (-ln t)^(alpha-1) (2(-ln t) - alpha)
        let slope = eps * x.powf(alpha - 1.0) * (2.0 * x - alpha);
        let f = OrliczFunction {
            kind: Kind::PowerLog {
                alpha,
                cutoff: TangentExt {
                    ln_eps: eps.ln(),
                    value,
                    slope,
                },
            },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        };
        debug_assert!(f.convexity_certificate(1e-12, 1.0, 200).pass);
        Ok(f)
    }

    pub fn dilation_sum(base: OrliczFunction, pairs: &[(f64, f64)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(pairs.len());
        for &(lambda, weight) in pairs {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::Domain(format!(
                    "dilation scale must lie in (0,1], got {lambda}"
                )));
            }
            if !(weight > 0.0) {
                return Err(Error::Argument(format!("weight must be positive, got {weight}")));
            }
            terms.push(DilationTerm {
                lambda,
                ln_lambda: lambda.ln(),
                weight,
                ln_weight: weight.ln(),
            });
        }
        Ok(OrliczFunction {
            kind: Kind::DilationSum {
                base: Box::new(base),
                terms,
            },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        })
    }

    /// Dilation sum with weights given in log form (for multiplicities
    /// outside the f64 range).
    pub fn dilation_sum_ln(base: OrliczFunction, pairs: &[(f64, f64)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(pairs.len());
        for &(ln_lambda, ln_weight) in pairs {
            if !(ln_lambda <= 0.0) {
                return Err(Error::Domain(format!(
                    "dilation scale must lie in (0,1], got ln {ln_lambda}"
                )));
            }
            terms.push(DilationTerm {
                lambda: ln_lambda.exp(),
                ln_lambda,
                weight: ln_weight.exp(),
                ln_weight,
            });
        }
        Ok(OrliczFunction {
            kind: Kind::DilationSum {
                base: Box::new(base),
                terms,
            },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        })
    }

    pub fn geometric_sum(
        base: OrliczFunction,
        tau: Ratio<u64>,
        kappa: Ratio<u64>,
        big_r: u32,
    ) -> Result<Self> {
        if ratio_to_f64(tau) <= 0.0 || ratio_to_f64(tau) >= 1.0 {
            return Err(Error::Argument(format!("tau must lie in (0,1), got {tau}")));
        }
        if ratio_to_f64(kappa) <= 0.0 || ratio_to_f64(kappa) >= 1.0 {
            return Err(Error::Argument(format!("kappa must lie in (0,1), got {kappa}")));
        }
        Ok(OrliczFunction {
            kind: Kind::GeometricSum {
                base: Box::new(base),
                tau,
                kappa,
                big_r,
            },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        })
    }

    pub fn synthesized(psi: CubicTable, k_const: f64) -> Self {
        OrliczFunction {
            kind: Kind::Synthesized { psi, k_const },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        }
    }

    /// Build from `(log10 t, M)` samples, ascending in t.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument("tabulated kind needs at least 2 points".into()));
        }
        let mut ln_ts = Vec::with_capacity(points.len());
        let mut ln_ms = Vec::with_capacity(points.len());
        for &(log10_t, m) in points {
            if !(m > 0.0) {
                return Err(Error::Domain(format!(
                    "tabulated values must be positive, got {m}"
                )));
            }
            ln_ts.push(log10_t * std::f64::consts::LN_10);
            ln_ms.push(m.ln());
        }
        if !ln_ts.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Argument("tabulated grid must be strictly increasing".into()));
        }
        if !ln_ms.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Domain("tabulated values must be nondecreasing".into()));
        }
        let n = ln_ts.len();
        let t_hi = ln_ts[n - 1].exp();
        let value = ln_ms[n - 1].exp();
        // Chord slope of the last segment in linear coordinates.
        let t_prev = ln_ts[n - 2].exp();
        let slope = (value - ln_ms[n - 2].exp()) / (t_hi - t_prev);
        Ok(OrliczFunction {
            kind: Kind::Tabulated {
                ln_ts,
                ln_ms,
                cutoff: TangentExt {
                    ln_eps: (t_hi).ln(),
                    value,
                    slope: slope.max(value / t_hi * 1e-6),
                },
            },
            ln_scale: 0.0,
            arg_ln_shift: 0.0,
        })
    }

    pub fn with_normalization(mut self, multiplier: f64) -> Result<Self> {
        if !(multiplier > 0.0) || !multiplier.is_finite() {
            return Err(Error::Argument(format!(
                "normalization must be a positive real, got {multiplier}"
            )));
        }
        self.ln_scale += multiplier.ln();
        Ok(self)
    }

    pub fn with_ln_normalization(mut self, ln_multiplier: f64) -> Self {
        self.ln_scale += ln_multiplier;
        self
    }

    /// Rescale so that M(1) = 1 (useful when a family must satisfy
    /// M(1) >= 1 exactly at the anchor).
    pub fn normalized_at_one(mut self) -> Self {
        let v = self.log_eval(0.0);
        self.ln_scale -= v;
        self
    }

    /// Argument dilation t -> gamma t given ln gamma.
    pub fn argument_dilated(mut self, ln_gamma: f64) -> Self {
        self.arg_ln_shift += ln_gamma;
        self
    }

    /// ln M(e^u). Returns -inf when the value is zero and NaN outside the
    /// representation's domain (Tabulated below the grid).
    pub fn log_eval(&self, u: f64) -> f64 {
        let u = u + self.arg_ln_shift;
        let v = match &self.kind {
            Kind::Power { p } => p * u,
            Kind::PowerLog { alpha, cutoff } => {
                if u <= cutoff.ln_eps {
                    2.0 * u + alpha * (-u).ln()
                } else {
                    cutoff.ln_eval(u)
                }
            }
            Kind::DilationSum { base, terms } => {
                let mut acc = LnSum::new();
                for t in terms {
                    acc.add_ln(t.ln_weight + base.log_eval(u + t.ln_lambda));
                }
                acc.ln_value()
            }
            Kind::GeometricSum {
                base,
                tau,
                kappa,
                big_r,
            } => {
                let ln_tau = ratio_ln(*tau);
                let ln_kappa = ratio_ln(*kappa);
                let r_max = 2 * *big_r as i64;
                let big_r = *big_r as i64;
                let mut acc = LnSum::new();
                for r in 0..=r_max {
                    let ln_w = (r - big_r).abs() as f64 * ln_kappa - 2.0 * r as f64 * ln_tau;
                    acc.add_ln(ln_w + base.log_eval(u + r as f64 * ln_tau));
                }
                acc.ln_value()
            }
            Kind::Synthesized { psi, k_const } => {
                let x = -u;
                let s = psi.eval(x);
                2.0 * u + (k_const + s * s).ln()
            }
            Kind::Tabulated { ln_ts, ln_ms, cutoff } => {
                if u > cutoff.ln_eps {
                    cutoff.ln_eval(u)
                } else if u < ln_ts[0] - 1e-12 {
                    f64::NAN
                } else {
                    // Piecewise linear in (ln t, ln M).
                    let i = match ln_ts.binary_search_by(|a| a.partial_cmp(&u).unwrap()) {
                        Ok(i) => return ln_ms[i] + self.ln_scale,
                        Err(i) => i.clamp(1, ln_ts.len() - 1),
                    };
                    let w = (u - ln_ts[i - 1]) / (ln_ts[i] - ln_ts[i - 1]);
                    ln_ms[i - 1] + w * (ln_ms[i] - ln_ms[i - 1])
                }
            }
        };
        v + self.ln_scale
    }

    /// M(t). Exact-direction convenience; may overflow to +inf for the
    /// astronomically normalized constructions.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("eval requires t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let td = if self.arg_ln_shift == 0.0 {
            t
        } else {
            t * self.arg_ln_shift.exp()
        };
        let scale = self.ln_scale.exp();
        // Direct formulas where they exist keep the advertised precision;
        // the remaining kinds go through the log form.
        match &self.kind {
            Kind::Power { p } => return Ok(scale * td.powf(*p)),
            Kind::PowerLog { alpha, cutoff } => {
                if td.ln() <= cutoff.ln_eps {
                    let x = -td.ln();
                    return Ok(scale * td * td * x.powf(*alpha));
                }
                let eps = cutoff.ln_eps.exp();
                return Ok(scale * (cutoff.value + cutoff.slope * (td - eps)));
            }
            Kind::Synthesized { psi, k_const } => {
                let s = psi.eval(-td.ln());
                return Ok(scale * td * td * (k_const + s * s));
            }
            // Compensated summation keeps the exact-weight identity at
            // machine precision for moderate-scale sums.
            Kind::DilationSum { base, terms }
                if terms.iter().all(|x| x.weight.is_finite()) && scale.is_finite() => {
                    let mut acc = KahanSum::new();
                    for term in terms {
                        acc.add(term.weight * base.eval(term.lambda * td)?);
                    }
                    return Ok(acc.value() * scale);
                }
            _ => {}
        }
        let v = self.log_eval(t.ln());
        if v.is_nan() {
            return Err(Error::Domain(format!(
                "t = {t} below the tabulated domain (no extrapolation rule)"
            )));
        }
        Ok(v.exp())
    }

    /// Smallest t with M(t) = y, by bracket doubling from t = 1 and
    /// bisection in ln t. Returns 0 for y = 0.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("inverse requires y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(self.inverse_ln(y.ln())?.exp())
    }

    /// ln of the inverse: u with log_eval(u) = ln_y.
    pub fn inverse_ln(&self, ln_y: f64) -> Result<f64> {
        let f = |u: f64| self.log_eval(u) - ln_y;
        let mut lo;
        let mut hi;
        let f0 = f(0.0);
        if f0.is_nan() {
            return Err(Error::Domain("inverse query outside tabulated domain".into()));
        }
        if f0 >= 0.0 {
            hi = 0.0;
            lo = -1.0;
            let mut step = 1.0;
            while f(lo) > 0.0 {
                step *= 2.0;
                lo -= step;
                if lo < LN_DOMAIN_MIN {
                    let v = f(LN_DOMAIN_MIN);
                    if v > 0.0 {
                        return Err(Error::Domain(format!(
                            "value {ln_y} (ln) not attained down to ln t = {LN_DOMAIN_MIN}"
                        )));
                    }
                    lo = LN_DOMAIN_MIN;
                    break;
                }
            }
        } else {
            lo = 0.0;
            hi = 1.0;
            let mut step = 1.0;
            while f(hi) < 0.0 {
                step *= 2.0;
                hi += step;
                if hi > LN_DOMAIN_MAX {
                    return Err(Error::UnreachableValue {
                        target: ln_y.exp(),
                        t_max: LN_DOMAIN_MAX.exp(),
                    });
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// M(lambda t) / M(lambda) for lambda, t in (0, 1].
    pub fn dilation_ratio(&self, lambda: f64, t: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda <= 1.0 && t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!(
                "dilation_ratio requires lambda, t in (0,1], got ({lambda}, {t})"
            )));
        }
        let denom = self.log_eval(lambda.ln());
        if denom == f64::NEG_INFINITY {
            return Err(Error::Underflow { lambda });
        }
        let numer = self.log_eval(lambda.ln() + t.ln());
        if numer.is_nan() || denom.is_nan() {
            return Err(Error::Domain("dilation_ratio outside tabulated domain".into()));
        }
        Ok((numer - denom).exp())
    }

    /// Logarithmic derivative d ln M / d ln t by central difference.
    pub fn elasticity(&self, u: f64) -> f64 {
        let h = 1e-5;
        (self.log_eval(u + h) - self.log_eval(u - h)) / (2.0 * h)
    }

    /// Slope-monotonicity certificate on a geometric grid: chord slopes of a
    /// convex function are nondecreasing. Margins are relative (slope scale),
    /// tolerance 1e-9.
    pub fn convexity_certificate(&self, lo: f64, hi: f64, points: usize) -> Certificate {
        let mut cert = Certificate::new("convexity")
            .with_grid(format!("geometric [{lo:.1e}, {hi:.1e}] x {points}"));
        cert.constant("tolerance", "1e-9 relative");
        let a = lo.ln();
        let b = hi.ln();
        let us: Vec<f64> = (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .collect();
        // ln slope of the chord over [t_i, t_{i+1}] computed stably:
        // slope = (M_hi - M_lo) / (t_hi - t_lo)
        //       = e^{lnM_hi} (1 - e^{lnM_lo - lnM_hi}) / (t_hi - t_lo).
        let ln_slope = |u0: f64, u1: f64| -> f64 {
            let m0 = self.log_eval(u0);
            let m1 = self.log_eval(u1);
            if !(m1 > m0) {
                // Decreasing or flat chord: convexity with M(0) = 0 forces
                // strictly increasing values, so flag it.
                return f64::NAN;
            }
            let dt = u1.exp() - u0.exp();
            m1 + (-(m0 - m1).exp()).ln_1p() - dt.ln()
        };
        let mut prev: Option<f64> = None;
        for w in us.windows(2) {
            let s = ln_slope(w[0], w[1]);
            if s.is_nan() {
                cert.observe(-1.0, 0.0, || format!("t = {:.6e}", w[0].exp()));
                break;
            }
            if let Some(p) = prev {
                // Nondecreasing slopes up to 1e-9 relative slack.
                let margin = s - p + 1e-9;
                cert.observe(margin, 0.0, || format!("t = {:.6e}", w[1].exp()));
            }
            prev = Some(s);
        }
        if cert.worst_upper_margin.is_infinite() {
            cert.worst_upper_margin = 0.0;
        }
        if cert.worst_lower_margin.is_infinite() {
            cert.worst_lower_margin = 0.0;
        }
        cert.finish()
    }

    /// Monotonicity certificate: values nondecreasing on a geometric grid.
    pub fn monotonicity_certificate(&self, lo: f64, hi: f64, points: usize) -> Certificate {
        let mut cert = Certificate::new("monotone")
            .with_grid(format!("geometric [{lo:.1e}, {hi:.1e}] x {points}"));
        let a = lo.ln();
        let b = hi.ln();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..points {
            let u = a + (b - a) * i as f64 / (points - 1) as f64;
            let v = self.log_eval(u);
            cert.observe(v - prev + 1e-12, 0.0, || format!("t = {:.6e}", u.exp()));
            prev = v;
        }
        cert.worst_upper_margin = 0.0;
        cert.finish()
    }
}

/// Largest t at which t^2 |log t|^alpha is still convex (alpha > 0):
/// M''(t) = x^{alpha-2} (2x^2 - 3 alpha x + alpha(alpha-1)), x = -ln t,
/// so convexity holds for x at or beyond the larger root.
fn powerlog_convexity_bound(alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    let disc = alpha * alpha + 8.0 * alpha;
    let x_star = (3.0 * alpha + disc.sqrt()) / 4.0;
    (-x_star).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_eval_examples() {
        let m = OrliczFunction::power(2.0).unwrap();
        assert_eq!(m.eval(0.5).unwrap(), 0.25);
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
        let m1 = OrliczFunction::power(1.0).unwrap();
        assert_eq!(m1.eval(3.0).unwrap(), 3.0);
    }

    #[test]
    fn powerlog_eval_native_formula() {
        // Below the cutoff the native formula t^2 |log t|^alpha applies
        // exactly: at t = e^-3, value 9 e^-6.
        let m = OrliczFunction::power_log(1.0).unwrap();
        let t = (-3.0f64).exp();
        let v = m.eval(t).unwrap();
        let expected = 3.0 * (-6.0f64).exp();
        assert!((v - expected).abs() < 1e-15 * expected, "{v}");
        // Beyond the cutoff the tangent extension is below the raw formula
        // (the raw formula is concave there).
        let raw = |t: f64| t * t * (-t.ln());
        let te = (-1.0f64).exp();
        let v = m.eval(te).unwrap();
        assert!(v < raw(te) && v > 0.9 * raw(te), "{v} vs {}", raw(te));
    }

    #[test]
    fn powerlog_cutoffs_are_dyadic_and_convex() {
        for alpha in [-2.0, -1.0, 1.0, 2.0, 3.0] {
            let m = OrliczFunction::power_log(alpha).unwrap();
            let Kind::PowerLog { cutoff, .. } = &m.kind else {
                panic!()
            };
            let eps = cutoff.ln_eps.exp();
            let log2 = eps.log2();
            assert!((log2 - log2.round()).abs() < 1e-9, "cutoff {eps} not dyadic");
            assert!(eps <= 0.25 + 1e-12);
            assert!(m.convexity_certificate(1e-12, 4.0, 400).pass, "alpha {alpha}");
            assert!(m.monotonicity_certificate(1e-12, 4.0, 400).pass);
        }
        // alpha = 1 has its convexity break at e^{-1.5} ~ 0.2231: cutoff 1/8.
        let m = OrliczFunction::power_log(1.0).unwrap();
        let Kind::PowerLog { cutoff, .. } = &m.kind else {
            panic!()
        };
        assert!((cutoff.ln_eps.exp() - 0.125).abs() < 1e-12);
        // alpha = 2 breaks at e^{-2.618}: cutoff 1/16.
        let m = OrliczFunction::power_log(2.0).unwrap();
        let Kind::PowerLog { cutoff, .. } = &m.kind else {
            panic!()
        };
        assert!((cutoff.ln_eps.exp() - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let m = OrliczFunction::power(2.0).unwrap();
        assert!((m.inverse(0.25).unwrap() - 0.5).abs() < 1e-12);
        // lambda_k = M^{-1}(1/k) for k = 4, 9.
        assert!((m.inverse(0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!((m.inverse(1.0 / 9.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let pl = OrliczFunction::power_log(1.0).unwrap();
        let y = pl.eval((-1.0f64).exp()).unwrap();
        assert!((pl.inverse(y).unwrap() - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn inverse_unreachable() {
        // Bounded tabulated function: large values unreachable.
        let m = OrliczFunction::tabulated(&[(-8.0, 1e-16), (-4.0, 1e-8), (0.0, 1.0)]).unwrap();
        // Slope extension makes large values reachable eventually, so use a
        // Power with a cap instead through the ln-domain guard.
        let p = OrliczFunction::power(2.0).unwrap();
        assert!(matches!(
            p.inverse(f64::INFINITY),
            Err(Error::Domain(_)) | Err(Error::UnreachableValue { .. })
        ));
        drop(m);
    }

    #[test]
    fn dilation_ratio_examples() {
        let m2 = OrliczFunction::power(2.0).unwrap();
        assert!((m2.dilation_ratio(0.3, 0.5).unwrap() - 0.25).abs() < 1e-14);
        let m3 = OrliczFunction::power(3.0).unwrap();
        assert!((m3.dilation_ratio(0.3, 0.5).unwrap() - 0.125).abs() < 1e-14);
        // PowerLog(2) at lambda = 1e-6, t = 0.5:
        // ratio = 0.25 (1 + log 2 / (6 log 10))^2.
        let pl = OrliczFunction::power_log(2.0).unwrap();
        let expected = 0.25 * (1.0 + 2f64.ln() / (6.0 * 10f64.ln())).powi(2);
        assert!((pl.dilation_ratio(1e-6, 0.5).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.2757).abs() < 1e-4);
    }

    #[test]
    fn dilation_sum_exact_weights() {
        let base = OrliczFunction::power_log(1.0).unwrap();
        let m = OrliczFunction::dilation_sum(base.clone(), &[(0.5, 2.0), (0.25, 1.0)]).unwrap();
        let direct =
            2.0 * base.eval(0.25).unwrap() + base.eval(0.125).unwrap();
        assert!((m.eval(0.5).unwrap() - direct).abs() < 1e-15 * direct);
        // identity weights give back the base
        let id = OrliczFunction::dilation_sum(base.clone(), &[(1.0, 1.0)]).unwrap();
        for t in [0.01, 0.3, 0.9] {
            assert!((id.eval(t).unwrap() - base.eval(t).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_scales_values() {
        let m = OrliczFunction::power(2.0).unwrap().with_normalization(3.0).unwrap();
        assert!((m.eval(0.5).unwrap() - 0.75).abs() < 1e-15);
        let n = OrliczFunction::power_log(2.0).unwrap().normalized_at_one();
        assert!((n.eval(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argument_dilation_shifts_scale() {
        let m = OrliczFunction::power(2.0).unwrap().argument_dilated((0.5f64).ln());
        assert!((m.eval(1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn geometric_sum_matches_term_loop() {
        let base = OrliczFunction::power_log(1.0).unwrap();
        let tau = Ratio::new(1u64, 2);
        let kappa = Ratio::new(3u64, 4);
        let g = OrliczFunction::geometric_sum(base.clone(), tau, kappa, 3).unwrap();
        for t in [0.9, 0.2, 1e-3] {
            let mut direct = 0.0;
            for r in 0..=6i32 {
                let w = 0.75f64.powi((r - 3).abs()) * 0.5f64.powi(-2 * r);
                direct += w * base.eval(0.5f64.powi(r) * t).unwrap();
            }
            let got = g.eval(t).unwrap();
            assert!((got - direct).abs() < 1e-12 * direct, "t = {t}");
        }
    }

    #[test]
    fn tabulated_domain_error_below_grid() {
        let m = OrliczFunction::tabulated(&[(-6.0, 1e-12), (-3.0, 1e-6), (0.0, 1.0)]).unwrap();
        assert!(matches!(m.eval(1e-9), Err(Error::Domain(_))));
        assert!((m.eval(1e-3).unwrap() - 1e-6).abs() < 1e-18);
        // Tangent extension above the grid.
        assert!(m.eval(2.0).unwrap() > 1.0);
    }

    #[test]
    fn log_eval_deep_arguments() {
        // No underflow at ln t = -1e5.
        let m = OrliczFunction::power_log(2.0).unwrap();
        let v = m.log_eval(-1e5);
        let expected = -2e5 + 2.0 * (1e5f64).ln();
        assert!((v - expected).abs() < 1e-9);
    }
}
