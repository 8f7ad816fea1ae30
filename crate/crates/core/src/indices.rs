//! Empirical dilation-index estimation and the derived tests: power
//! envelopes, basis-equivalence checking, and the containment report.
//!
//! The indices are asymptotic objects; a finite grid can only bracket them.
//! Boundedness of q -> sup M(lambda t) / (M(lambda) t^q) is detected by
//! comparing the extremum over the deep half of the t-grid with the shallow
//! half: a genuine divergence grows geometrically with depth, while the
//! logarithmic corrections of a near-Hilbert function do not.

use serde::{Deserialize, Serialize};

use crate::cert::Certificate;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::orlicz::OrliczFunction;

/// Growth factor between half-depths that counts as divergence.
const GROWTH_THRESHOLD: f64 = 1.9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub grid_spec: String,
}

impl IndexEstimate {
    /// Midpoints, for quick comparisons.
    pub fn alpha_mid(&self) -> f64 {
        0.5 * (self.alpha_lo + self.alpha_hi)
    }

    pub fn beta_mid(&self) -> f64 {
        0.5 * (self.beta_lo + self.beta_hi)
    }

    /// Both indices bracketed within `tol` of 2.
    pub fn is_near_two(&self, tol: f64) -> bool {
        (self.alpha_lo - 2.0).abs() <= tol
            && (self.alpha_hi - 2.0).abs() <= tol
            && (self.beta_lo - 2.0).abs() <= tol
            && (self.beta_hi - 2.0).abs() <= tol
    }
}

/// Empirical brackets for the dilation indices over the given grid.
pub fn estimate_indices(m: &OrliczFunction, grid: &GridSpec) -> Result<IndexEstimate> {
    if grid.lambda.points < 32 || grid.t.points < 32 {
        return Err(Error::Argument(
            "index grid needs at least 32 points per axis".into(),
        ));
    }
    let lambda_ln = grid.lambda.ln_values();
    let t_ln = grid.t.ln_values();
    // Split off the deepest quarter of the t-range: a logarithmic correction
    // |log t|^a contributes only (4/3)^|a| between the slices, while a power
    // mismatch contributes e^{|dq| depth/4}.
    let t_mid = 0.75 * grid.t.lo.ln() + 0.25 * grid.t.hi.ln();

    // Precompute ln of the dilation ratio for every (lambda, t) pair along
    // with the ln t to weight by, split at the quarter depth.
    let mut deep: Vec<(f64, f64)> = Vec::new(); // (ln ratio, ln t)
    let mut shallow: Vec<(f64, f64)> = Vec::new();
    for &ul in &lambda_ln {
        let denom = m.log_eval(ul);
        if !denom.is_finite() {
            continue;
        }
        for &ut in &t_ln {
            let ratio = m.log_eval(ul + ut) - denom;
            if !ratio.is_finite() {
                continue;
            }
            if ut < t_mid {
                deep.push((ratio, ut));
            } else {
                shallow.push((ratio, ut));
            }
        }
    }
    if deep.is_empty() || shallow.is_empty() {
        return Err(Error::Numeric {
            point: 0.0,
            reason: "index grid produced no finite ratios".into(),
        });
    }

    let sup_for = |q: f64, data: &[(f64, f64)]| -> f64 {
        data.iter()
            .map(|&(r, ut)| r - q * ut)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let inf_for = |q: f64, data: &[(f64, f64)]| -> f64 {
        data.iter()
            .map(|&(r, ut)| r - q * ut)
            .fold(f64::INFINITY, f64::min)
    };

    let ln_threshold = GROWTH_THRESHOLD.ln();
    let mesh_step = 0.01;
    let mesh: Vec<f64> = (0..=700).map(|i| 0.5 + mesh_step * i as f64).collect();
    // A divergence of rate (q - alpha) only clears the threshold once
    // (q - alpha) * slice_depth > ln_threshold, so the detector is blind to
    // the last `resolution` below the crossover. Widen the bracket by it.
    let slice_depth = t_mid - grid.t.lo.ln();
    let resolution = ln_threshold / slice_depth + mesh_step;

    // alpha: largest q whose sup stays bounded (no deep-vs-shallow growth).
    let mut first_growing = None;
    for &q in &mesh {
        if sup_for(q, &deep) > sup_for(q, &shallow) + ln_threshold {
            first_growing = Some(q);
            break;
        }
    }
    let (alpha_lo, alpha_hi) = match first_growing {
        Some(q) => (q - resolution, q),
        None => (*mesh.last().unwrap(), *mesh.last().unwrap() + resolution),
    };

    // beta: smallest q whose inf stays bounded away from zero.
    let mut smallest_stable = None;
    for &q in mesh.iter().rev() {
        if inf_for(q, &deep) < inf_for(q, &shallow) - ln_threshold {
            break;
        }
        smallest_stable = Some(q);
    }
    let (beta_lo, beta_hi) = match smallest_stable {
        Some(q) => (q, q + resolution),
        None => (*mesh.last().unwrap(), *mesh.last().unwrap() + resolution),
    };

    Ok(IndexEstimate {
        alpha_lo,
        alpha_hi,
        beta_lo,
        beta_hi,
        grid_spec: grid.describe(),
    })
}

/// Empirical envelope constants for c (v/u)^p <= M(v)/M(u) <= C (v/u)^q over
/// 0 < v <= u <= 1, sampled as v = u t. Returns (c, C) with a 10% safety
/// factor applied on each side.
pub fn estimate_power_envelope(
    m: &OrliczFunction,
    p: f64,
    q: f64,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    if !(p > 2.0 && (1.0..2.0).contains(&q)) {
        return Err(Error::Argument(format!(
            "envelope needs p > 2 > q >= 1, got ({p}, {q})"
        )));
    }
    let u_ln = grid.lambda.ln_values();
    let t_ln = grid.t.ln_values();
    let t_mid = 0.75 * grid.t.lo.ln() + 0.25 * grid.t.hi.ln();

    // ln of M(ut)/M(u) * (u/v)^p = ratio - p ln t (lower side with p),
    // and ratio - q ln t (upper side with q).
    let mut c_deep = f64::INFINITY;
    let mut c_shallow = f64::INFINITY;
    let mut big_c_deep = f64::NEG_INFINITY;
    let mut big_c_shallow = f64::NEG_INFINITY;
    for &uu in &u_ln {
        let denom = m.log_eval(uu);
        if !denom.is_finite() {
            continue;
        }
        for &ut in &t_ln {
            let ratio = m.log_eval(uu + ut) - denom;
            if !ratio.is_finite() {
                continue;
            }
            let lower = ratio - p * ut;
            let upper = ratio - q * ut;
            if ut < t_mid {
                c_deep = c_deep.min(lower);
                big_c_deep = big_c_deep.max(upper);
            } else {
                c_shallow = c_shallow.min(lower);
                big_c_shallow = big_c_shallow.max(upper);
            }
        }
    }
    let ln_threshold = GROWTH_THRESHOLD.ln();
    let c_ln = c_deep.min(c_shallow);
    let big_c_ln = big_c_deep.max(big_c_shallow);
    if !c_ln.is_finite() || !big_c_ln.is_finite() {
        return Err(Error::EnvelopeFailure {
            p,
            q,
            reason: "non-finite extrema on the grid".into(),
        });
    }
    if c_deep < c_shallow - ln_threshold {
        return Err(Error::EnvelopeFailure {
            p,
            q,
            reason: format!(
                "lower envelope decays with depth (deep {:.3e} vs shallow {:.3e})",
                c_deep.exp(),
                c_shallow.exp()
            ),
        });
    }
    if big_c_deep > big_c_shallow + ln_threshold {
        return Err(Error::EnvelopeFailure {
            p,
            q,
            reason: format!(
                "upper envelope grows with depth (deep {:.3e} vs shallow {:.3e})",
                big_c_deep.exp(),
                big_c_shallow.exp()
            ),
        });
    }
    let c = 0.9 * c_ln.exp();
    let big_c = 1.1 * big_c_ln.exp();
    if !(c > 0.0) {
        return Err(Error::EnvelopeFailure {
            p,
            q,
            reason: "lower constant underflowed to zero".into(),
        });
    }
    Ok((c, big_c))
}

/// Search for constants making C^-1 M(K^-1 t) <= N(t) <= C M(K t) hold below
/// some t0; certificate records the found triple or a failing witness.
pub fn check_equivalence(
    m: &OrliczFunction,
    n: &OrliczFunction,
    grid_points: usize,
) -> Certificate {
    let mut cert = Certificate::new("basis-equivalence");
    cert.constant("criterion", "C^-1 M(t/K) <= N(t) <= C M(K t) for t <= t0");
    let c_mesh: Vec<f64> = (0..=60).map(|j| (j as f64) * std::f64::consts::LN_2).collect();
    let k_mesh: Vec<f64> = (0..=8).map(|j| (j as f64) * std::f64::consts::LN_2).collect();
    let t0_mesh = [1.0f64, 0.25, 0.0625, 1.0 / 256.0];

    let mut best_witness: Option<(f64, f64)> = None; // (t, deficit)
    for &t0 in &t0_mesh {
        for &ln_k in &k_mesh {
            for &ln_c in &c_mesh {
                // A near-zero failure only shows below 1/(C K^2), so the
                // verification depth must scale with the candidate constants.
                let depth = (23.0 * std::f64::consts::LN_2)
                    .max(ln_c + 2.0 * ln_k + 13.0 * std::f64::consts::LN_2);
                let lo_ln = t0.ln() - depth;
                let mut ok = true;
                let mut worst = f64::INFINITY;
                for i in 0..grid_points {
                    let ut =
                        lo_ln + (t0.ln() - lo_ln) * i as f64 / (grid_points - 1) as f64;
                    let n_v = n.log_eval(ut);
                    let lower = -ln_c + m.log_eval(ut - ln_k);
                    let upper = ln_c + m.log_eval(ut + ln_k);
                    if !(n_v >= lower && n_v <= upper) {
                        ok = false;
                        let deficit = (lower - n_v).max(n_v - upper);
                        if best_witness.is_none_or(|(_, d)| deficit < d) {
                            best_witness = Some((ut.exp(), deficit));
                        }
                        break;
                    }
                    worst = worst.min((n_v - lower).min(upper - n_v));
                }
                if ok {
                    cert.constant("C", format!("{:.6e}", ln_c.exp()));
                    cert.constant("K", format!("{:.6e}", ln_k.exp()));
                    cert.constant("t0", format!("{t0}"));
                    cert.grid = format!("log-grid ({:.1e}, {t0}] x {grid_points}", t0 * 1e-10);
                    cert.observe(worst, worst, String::new);
                    return cert.finish();
                }
            }
        }
    }
    cert.grid = format!("C mesh 2^0..2^60, K mesh 2^0..2^8, t0 {:?}", t0_mesh);
    if let Some((t, _)) = best_witness {
        cert.witness = Some(format!("no (C, K, t0) covers t = {t:.6e}"));
    }
    cert.observe(-1.0, 0.0, || "mesh exhausted".to_string());
    cert.finish()
}

/// Candidate embedding range from an index estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentReport {
    /// Empirical interval of p for which l_p embeds.
    pub p_lo: f64,
    pub p_hi: f64,
    pub near_hilbert_candidate: bool,
    pub grid_spec: String,
}

pub fn containment_report(idx: &IndexEstimate) -> ContainmentReport {
    let tol = 0.15;
    ContainmentReport {
        p_lo: idx.alpha_lo,
        p_hi: idx.beta_hi,
        near_hilbert_candidate: (idx.alpha_lo - 2.0).abs() <= tol
            && (idx.beta_hi - 2.0).abs() <= tol,
        grid_spec: idx.grid_spec.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, LogGrid};

    fn default_grid() -> GridSpec {
        GridSpec::indices_default()
    }

    #[test]
    fn power_indices_bracket_p() {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let m = OrliczFunction::power(p).unwrap();
            let est = estimate_indices(&m, &default_grid()).unwrap();
            // Exact powers: the brackets contain p.
            assert!(
                est.alpha_lo <= p && p <= est.alpha_hi,
                "alpha bracket [{}, {}] misses p = {p}",
                est.alpha_lo,
                est.alpha_hi
            );
            assert!(
                est.beta_lo <= p && p <= est.beta_hi,
                "beta bracket [{}, {}] misses p = {p}",
                est.beta_lo,
                est.beta_hi
            );
            assert!((est.alpha_mid() - p).abs() < 0.05, "alpha {} for p {p}", est.alpha_mid());
            assert!((est.beta_mid() - p).abs() < 0.05, "beta {} for p {p}", est.beta_mid());
            assert!(est.alpha_lo <= est.beta_hi + 0.05);
        }
    }

    #[test]
    fn powerlog_indices_near_two() {
        for alpha in [-2.0, -1.0, 1.0, 2.0] {
            let m = OrliczFunction::power_log(alpha).unwrap();
            let est = estimate_indices(&m, &default_grid()).unwrap();
            assert!(
                (est.alpha_mid() - 2.0).abs() < 0.1,
                "alpha {} for powerlog {alpha}",
                est.alpha_mid()
            );
            assert!(
                (est.beta_mid() - 2.0).abs() < 0.1,
                "beta {} for powerlog {alpha}",
                est.beta_mid()
            );
        }
    }

    #[test]
    fn envelope_examples() {
        let grid = default_grid();
        // Power(2) with (p, q) = (3, 1): both extrema equal 1.
        let m2 = OrliczFunction::power(2.0).unwrap();
        let (c, big_c) = estimate_power_envelope(&m2, 3.0, 1.0, &grid).unwrap();
        assert!((c - 0.9).abs() < 1e-9, "c = {c}");
        assert!((big_c - 1.1).abs() < 1e-9, "C = {big_c}");
        // PowerLog(1) with milder exponents: finite positive envelope.
        let pl = OrliczFunction::power_log(1.0).unwrap();
        let (c, big_c) = estimate_power_envelope(&pl, 2.5, 1.5, &grid).unwrap();
        assert!(c > 0.0 && big_c.is_finite() && big_c >= 1.0);
        // Power(1) fails: (v/u)^{-0.5} unbounded on the q side.
        let m1 = OrliczFunction::power(1.0).unwrap();
        assert!(matches!(
            estimate_power_envelope(&m1, 3.0, 1.5, &grid),
            Err(Error::EnvelopeFailure { .. })
        ));
    }

    #[test]
    fn equivalence_examples() {
        let m2 = OrliczFunction::power(2.0).unwrap();
        let scaled = OrliczFunction::power(2.0)
            .unwrap()
            .with_normalization(3.0)
            .unwrap();
        let cert = check_equivalence(&m2, &scaled, 160);
        assert!(cert.pass, "{cert:?}");
        let m3 = OrliczFunction::power(3.0).unwrap();
        let cert = check_equivalence(&m2, &m3, 160);
        assert!(!cert.pass);
        assert!(cert.witness.is_some());
    }

    #[test]
    fn containment_flags() {
        let m = OrliczFunction::power(2.0).unwrap();
        let est = estimate_indices(&m, &default_grid()).unwrap();
        let rep = containment_report(&est);
        assert!(rep.near_hilbert_candidate);
        let m = OrliczFunction::power(1.5).unwrap();
        let est = estimate_indices(&m, &default_grid()).unwrap();
        let rep = containment_report(&est);
        assert!(!rep.near_hilbert_candidate);
        assert!((rep.p_lo - 1.5).abs() < 0.05 && (rep.p_hi - 1.5).abs() < 0.05);
        let m = OrliczFunction::power_log(2.0).unwrap();
        let est = estimate_indices(&m, &default_grid()).unwrap();
        assert!(containment_report(&est).near_hilbert_candidate);
    }
}
