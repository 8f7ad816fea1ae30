//! Scalar helpers: compensated summation, log-space accumulation, exact
//! rational selection, and big-integer conversions.
//!
//! Everything here is deterministic; the log-space accumulators exist because
//! the integer-weight constructions routinely produce values far outside the
//! double-precision range, while every quantity the toolkit reports is a
//! ratio, a logarithm or a margin that fits comfortably in an `f64`.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Kahan–Babuska compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Streaming log-sum-exp: accumulates `ln Σ exp(x_i)` without overflow.
///
/// Terms of `-inf` (zero contributions) are accepted and ignored.
#[derive(Clone, Copy, Debug)]
pub struct LnSum {
    max: f64,
    sum: f64,
}

impl Default for LnSum {
    fn default() -> Self {
        LnSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LnSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_ln(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// ln of the accumulated sum; `-inf` when nothing was added.
    pub fn ln_value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Largest dyadic 2^-j (j >= 0) that is <= x. Returns `None` for x < 2^-60.
pub fn largest_dyadic_leq(x: f64) -> Option<f64> {
    if !(x > 0.0) {
        return None;
    }
    let mut d = 1.0f64;
    for _ in 0..=60 {
        if d <= x {
            return Some(d);
        }
        d *= 0.5;
    }
    None
}

/// The unique fraction of smallest denominator in the open interval
/// `(lo, hi)`, by continued-fraction (Stern–Brocot) descent.
/// Requires `0 <= lo < hi`.
pub fn simplest_in_open(lo: Ratio<u128>, hi: Ratio<u128>) -> Ratio<u128> {
    assert!(lo < hi, "empty interval");
    let a = lo.floor().to_integer();
    let next_int = Ratio::from_integer(a + 1);
    if next_int < hi {
        return next_int;
    }
    let lo_frac = lo - Ratio::from_integer(a);
    let hi_frac = hi - Ratio::from_integer(a);
    let tail = if lo_frac.is_zero() {
        // (0, hi_frac): smallest k with 1/k < hi_frac.
        let k = hi_frac.recip().floor().to_integer() + 1;
        Ratio::new(1, k)
    } else {
        simplest_in_open(hi_frac.recip(), lo_frac.recip()).recip()
    };
    Ratio::from_integer(a) + tail
}

/// Best rational approximation to `x` with denominator at most `max_den`
/// (brute force over denominators; ties resolved toward the smaller one).
pub fn best_rational_with_denominator(x: f64, max_den: u64) -> Ratio<u64> {
    let mut best = Ratio::new(x.round().max(0.0) as u64, 1);
    let mut best_err = (x - ratio_to_f64(best)).abs();
    for q in 1..=max_den {
        let p = (x * q as f64).round().max(0.0) as u64;
        let cand = Ratio::new(p, q);
        let err = (x - ratio_to_f64(cand)).abs();
        if err + 1e-18 < best_err {
            best = cand;
            best_err = err;
        }
    }
    best
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn ratio_u128_to_u64(r: Ratio<u128>) -> Option<Ratio<u64>> {
    let n = u64::try_from(*r.numer()).ok()?;
    let d = u64::try_from(*r.denom()).ok()?;
    Some(Ratio::new(n, d))
}

/// ln of a positive rational.
pub fn ratio_ln(r: Ratio<u64>) -> f64 {
    (*r.numer() as f64).ln() - (*r.denom() as f64).ln()
}

/// Prime factorization of a u64 by trial division (inputs here are small
/// denominators, never larger than a few million).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Natural log of a positive big integer.
pub fn biguint_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 53 {
        return x.to_u64_digits().first().map(|&d| d as f64).unwrap_or(0.0).ln();
    }
    // Take the top 64 bits as a mantissa.
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    let mantissa = top.to_u64_digits()[0] as f64;
    mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Smallest big integer >= exp(ln_x), for moderate ln_x (used for ceilings
/// of values that can exceed the f64 range).
pub fn biguint_from_ln_ceil(ln_x: f64) -> BigUint {
    if ln_x <= 0.0 {
        return BigUint::one();
    }
    let bits = ln_x / std::f64::consts::LN_2;
    if bits < 52.0 {
        return BigUint::from(ln_x.exp().ceil() as u64);
    }
    // mantissa * 2^shift with a 52-bit mantissa, rounded up.
    let shift = (bits - 52.0).ceil() as u64;
    let mantissa = (ln_x - shift as f64 * std::f64::consts::LN_2).exp().ceil() as u64;
    BigUint::from(mantissa) << shift
}

/// Scientific-notation rendering of exp(ln_v) that stays exact in the
/// exponent even when the value itself over- or underflows f64.
pub fn format_exp_ln(ln_v: f64) -> String {
    if ln_v == f64::NEG_INFINITY {
        return "0".to_string();
    }
    let log10 = ln_v / std::f64::consts::LN_10;
    let exp = log10.floor();
    let mantissa = 10f64.powf(log10 - exp);
    format!("{:.12}e{}", mantissa, exp as i64)
}

/// Deterministic split of an inclusive index range into `chunks` pieces.
pub fn chunk_ranges(len: usize, chunks: usize) -> Vec<(usize, usize)> {
    let chunks = chunks.max(1).min(len.max(1));
    let base = len / chunks;
    let extra = len % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for i in 0..chunks {
        let sz = base + usize::from(i < extra);
        out.push((start, start + sz));
        start += sz;
    }
    out
}

/// Thread cap from `ORLICZ_LAB_THREADS` (defaults to 1; sweeps merge their
/// chunks in index order so results are identical to a sequential run).
pub fn thread_cap() -> usize {
    std::env::var("ORLICZ_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
        .min(64)
}

/// Parse a `num/den` or plain integer string into a rational.
pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let parts: Vec<&str> = s.split('/').collect();
    match parts.as_slice() {
        [n] => {
            let n: u64 = n.trim().parse().map_err(|_| Error::parse(0, format!("bad rational {s:?}")))?;
            Ok(Ratio::new(n, 1))
        }
        [n, d] => {
            let n: u64 = n.trim().parse().map_err(|_| Error::parse(0, format!("bad rational {s:?}")))?;
            let d: u64 = d.trim().parse().map_err(|_| Error::parse(0, format!("bad rational {s:?}")))?;
            if d == 0 {
                return Err(Error::parse(0, "zero denominator"));
            }
            Ok(Ratio::new(n, d))
        }
        _ => Err(Error::parse(0, format!("bad rational {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lnsum_matches_direct() {
        let xs = [0.3, -2.0, 5.0, 4.9, -30.0];
        let mut acc = LnSum::new();
        for &x in &xs {
            acc.add_ln(x);
        }
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        assert!((acc.ln_value() - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn lnsum_handles_huge_shift() {
        let mut acc = LnSum::new();
        acc.add_ln(-50_000.0);
        acc.add_ln(50_000.0);
        assert!((acc.ln_value() - 50_000.0).abs() < 1e-12);
    }

    #[test]
    fn simplest_rational_brute_force_agreement() {
        // Compare with a brute-force scan over denominators.
        let cases = [
            (Ratio::new(2u128, 3), Ratio::new(3u128, 4)),
            (Ratio::new(128u128, 129), Ratio::new(1u128, 1)),
            (Ratio::new(816u128, 1000), Ratio::new(1u128, 1)),
            (Ratio::new(2048u128, 2049), Ratio::new(1u128, 1)),
            (Ratio::new(1u128, 10), Ratio::new(1u128, 9)),
        ];
        for (lo, hi) in cases {
            let got = simplest_in_open(lo, hi);
            assert!(got > lo && got < hi, "{got} not inside ({lo}, {hi})");
            let mut brute = None;
            'outer: for q in 1u128..=5000 {
                for p in 1..=q {
                    let r = Ratio::new(p, q);
                    if r > lo && r < hi {
                        brute = Some(r);
                        break 'outer;
                    }
                }
            }
            assert_eq!(got, brute.unwrap(), "interval ({lo}, {hi})");
        }
    }

    #[test]
    fn dyadic_selection() {
        assert_eq!(largest_dyadic_leq(0.3), Some(0.25));
        assert_eq!(largest_dyadic_leq(1.0), Some(1.0));
        assert_eq!(largest_dyadic_leq(0.0102), Some(0.0078125));
        assert_eq!(largest_dyadic_leq(-1.0), None);
    }

    #[test]
    fn biguint_ln_roundtrip() {
        let x = BigUint::from(12345u64).pow(321);
        let expected = 321.0 * (12345f64).ln();
        assert!((biguint_ln(&x) - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn biguint_ceil_from_ln() {
        assert_eq!(biguint_from_ln_ceil(0.0), BigUint::one());
        assert_eq!(biguint_from_ln_ceil(5f64.ln()), BigUint::from(5u32));
        let big = biguint_from_ln_ceil(1000.0);
        let back = biguint_ln(&big);
        assert!(back >= 1000.0 && back < 1000.0001);
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(130), vec![(2, 1), (5, 1), (13, 1)]);
        assert_eq!(factorize(2049), vec![(3, 1), (683, 1)]);
        assert_eq!(factorize(1), vec![]);
    }
}
