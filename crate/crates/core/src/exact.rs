//! Exact scalar arithmetic.
//!
//! Rationals are `num_rational::BigRational`, which keeps `den > 0` and
//! `gcd(|num|, den) = 1` after every operation. Everything here is exact;
//! the only approximate values are the `f64` renderings used for display.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// The sawtooth `psi(q) = q - floor(q) - 1/2`, in `[-1/2, 1/2)`.
pub fn psi(q: &Rational) -> Rational {
    q - q.floor() - half()
}

/// `psi(num / den)` for integers, built without an intermediate floor.
pub fn psi_ratio(num: u64, den: u64) -> Rational {
    let (n, d) = psi_ratio_raw(num, den);
    Rational::new(n, d)
}

/// Unreduced numerator/denominator of `psi(num / den)`: `(2 (num mod den) - den) / (2 den)`.
pub(crate) fn psi_ratio_raw(num: u64, den: u64) -> (BigInt, BigInt) {
    assert!(den > 0, "psi_ratio with zero denominator");
    let rem = (num % den) as i128;
    let den = den as i128;
    (BigInt::from(2 * rem - den), BigInt::from(2 * den))
}

/// Exact sum of many fractions by balanced pairwise combination.
///
/// Terms are `(numerator, denominator)` with nonzero denominators; the
/// result is reduced once at the end.
pub fn sum_fractions(mut terms: Vec<(BigInt, BigInt)>) -> Rational {
    if terms.is_empty() {
        return Rational::zero();
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some((an, ad)) = it.next() {
            match it.next() {
                Some((bn, bd)) => {
                    if ad == bd {
                        next.push((an + bn, ad));
                    } else {
                        next.push((&an * &bd + &bn * &ad, ad * bd));
                    }
                }
                None => next.push((an, ad)),
            }
        }
        terms = next;
    }
    let (n, d) = terms.pop().unwrap();
    Rational::new(n, d)
}

pub fn sum_rationals<I: IntoIterator<Item = Rational>>(terms: I) -> Rational {
    sum_fractions(
        terms
            .into_iter()
            .map(|q| {
                let (n, d) = q.into_raw();
                (n, d)
            })
            .collect(),
    )
}

/// `d^r <= n`, computed without overflow.
fn pow_le(d: u64, r: u32, n: u64) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..r {
        acc = match acc.checked_mul(d as u128) {
            Some(v) if v <= n as u128 => v,
            _ => return false,
        };
    }
    true
}

/// The unique `d >= 0` with `d^r <= n < (d+1)^r`.
///
/// A floating-point estimate seeds the search and is then corrected with the
/// exact predicate in both directions, so the boundary `d^r == n` is exact.
pub fn integer_rth_root(n: u64, r: u32) -> Result<u64> {
    if r == 0 {
        return Err(Error::InvalidArgument("root index r must be >= 1".into()));
    }
    if r == 1 || n < 2 {
        return Ok(n);
    }
    if r >= 64 {
        return Ok(1);
    }
    let mut d = (n as f64).powf(1.0 / r as f64) as u64;
    while d > 0 && !pow_le(d, r, n) {
        d -= 1;
    }
    while pow_le(d + 1, r, n) {
        d += 1;
    }
    Ok(d)
}

/// `Some(d)` iff `n == d^r` exactly.
pub fn as_perfect_rth_power(n: u64, r: u32) -> Option<u64> {
    if r == 0 || n == 0 {
        return None;
    }
    let d = integer_rth_root(n, r).ok()?;
    if checked_pow(d, r) == Some(n) {
        Some(d)
    } else {
        None
    }
}

pub fn checked_pow(d: u64, r: u32) -> Option<u64> {
    d.checked_pow(r)
}

/// Floor of the r-th root of an arbitrary-precision integer.
pub fn big_rth_root(n: &BigUint, r: u32) -> BigUint {
    n.nth_root(r)
}

/// Ceiling of the r-th root.
fn big_rth_root_ceil(n: &BigUint, r: u32) -> BigUint {
    let f = n.nth_root(r);
    if &f.pow(r) == n {
        f
    } else {
        f + 1u32
    }
}

/// `floor(q)` clamped into `u64` (negative values become 0).
pub fn floor_u64(q: &Rational) -> u64 {
    let f = q.floor().to_integer();
    if f.sign() == Sign::Minus {
        0
    } else {
        f.to_u64().unwrap_or(u64::MAX)
    }
}

/// `floor(x / a)` for positive rational `a`, clamped into `u64`.
pub fn floor_div(x: u64, a: &Rational) -> u64 {
    let (p, q) = (a.numer(), a.denom());
    let v = (BigInt::from(x) * q).div_floor(p);
    if v.sign() == Sign::Minus {
        0
    } else {
        v.to_u64().unwrap_or(u64::MAX)
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an integer or p/q rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Decimal rendering with a fixed number of significant digits.
pub fn to_decimal(q: &Rational, sig: usize) -> String {
    format!("{:.*e}", sig.saturating_sub(1), to_f64(q))
}

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn scale(&self, c: &Rational) -> Interval {
        let a = &self.lo * c;
        let b = &self.hi * c;
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn add_scalar(&self, c: &Rational) -> Interval {
        Interval {
            lo: &self.lo + c,
            hi: &self.hi + c,
        }
    }

    /// Product of two intervals with nonnegative endpoints.
    pub fn mul_nonneg(&self, other: &Interval) -> Interval {
        debug_assert!(!self.lo.is_negative() && !other.lo.is_negative());
        Interval {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    /// Smallest enclosing interval with endpoints in `2^-bits Z`.
    pub fn outward_dyadic(&self, bits: u32) -> Interval {
        let scale = BigInt::one() << bits;
        let s = int(scale.clone());
        Interval {
            lo: Rational::new((&self.lo * &s).floor().to_integer(), scale.clone()),
            hi: Rational::new((&self.hi * &s).ceil().to_integer(), scale),
        }
    }

    /// `{ |v| : v in self }`.
    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            Interval {
                lo: -&self.hi,
                hi: -&self.lo,
            }
        } else {
            let m = std::cmp::max(-&self.lo, self.hi.clone());
            Interval {
                lo: Rational::zero(),
                hi: m,
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", to_decimal(&self.lo, 12))
        } else {
            write!(
                f,
                "[{}, {}]",
                to_decimal(&self.lo, 12),
                to_decimal(&self.hi, 12)
            )
        }
    }
}

/// Certified enclosure of `base^exp` for `base > 0` (or `base = 0`, `exp > 0`).
///
/// Exact whenever the result is rational with a recoverable root; otherwise
/// both endpoints are dyadic with `bits` fractional bits and differ by one ulp.
pub fn pow_bounds(base: &Rational, exp: &Rational, bits: u32) -> Result<Interval> {
    if base.is_negative() {
        return Err(Error::InvalidArgument("pow_bounds needs base >= 0".into()));
    }
    if exp.is_zero() {
        return Ok(Interval::point(Rational::one()));
    }
    if base.is_zero() {
        if exp.is_negative() {
            return Err(Error::InvalidArgument("0 to a negative power".into()));
        }
        return Ok(Interval::point(Rational::zero()));
    }
    let (mut a, mut b) = (
        base.numer().magnitude().clone(),
        base.denom().magnitude().clone(),
    );
    if exp.is_negative() {
        std::mem::swap(&mut a, &mut b);
    }
    let p = exp
        .numer()
        .magnitude()
        .to_u32()
        .ok_or(Error::Overflow("pow_bounds exponent numerator"))?;
    let q = exp
        .denom()
        .magnitude()
        .to_u32()
        .ok_or(Error::Overflow("pow_bounds exponent denominator"))?;
    let num = a.pow(p);
    let den = b.pow(p);
    if q == 1 {
        return Ok(Interval::point(Rational::new(num.into(), den.into())));
    }
    let rn = num.nth_root(q);
    let rd = den.nth_root(q);
    if rn.pow(q) == num && rd.pow(q) == den {
        return Ok(Interval::point(Rational::new(rn.into(), rd.into())));
    }
    // floor/ceil of 2^bits * (num/den)^(1/q)
    let scaled = num << (bits as usize * q as usize);
    let (quot, rem) = scaled.div_rem(&den);
    let lo_int = big_rth_root(&quot, q);
    let hi_int = if rem.is_zero() {
        big_rth_root_ceil(&quot, q)
    } else {
        big_rth_root_ceil(&(quot + 1u32), q)
    };
    let scale = BigInt::one() << bits as usize;
    Ok(Interval {
        lo: Rational::new(lo_int.into(), scale.clone()),
        hi: Rational::new(hi_int.into(), scale),
    })
}

/// Compare `a^p` with `b^q` exactly for nonnegative rationals.
pub fn cmp_powers(a: &Rational, p: u32, b: &Rational, q: u32) -> Ordering {
    num_traits::pow(a.clone(), p as usize).cmp(&num_traits::pow(b.clone(), q as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&rat(1, 2)), Rational::zero());
        assert_eq!(psi(&int(3)), rat(-1, 2));
        assert_eq!(psi(&rat(7, 3)), rat(-1, 6));
        assert_eq!(psi(&rat(-1, 3)), rat(1, 6));
        assert_eq!(psi_ratio(100, 9), rat(-7, 18));
        assert_eq!(psi_ratio(7, 3), rat(-1, 6));
    }

    #[test]
    fn root_examples() {
        assert_eq!(integer_rth_root(0, 5).unwrap(), 0);
        assert_eq!(integer_rth_root(100, 2).unwrap(), 10);
        assert_eq!(integer_rth_root(99, 2).unwrap(), 9);
        assert_eq!(integer_rth_root(u64::MAX, 2).unwrap(), 4294967295);
        assert_eq!(integer_rth_root(u64::MAX, 63).unwrap(), 2);
        assert_eq!(integer_rth_root(1 << 63, 63).unwrap(), 2);
        assert_eq!(integer_rth_root((1 << 63) - 1, 63).unwrap(), 1);
        assert!(integer_rth_root(10, 0).is_err());
        // near a float rounding boundary
        let n = 999_999_999_999u64.pow(1) * 1_000_001;
        let d = integer_rth_root(n, 2).unwrap();
        assert!(d * d <= n && (d + 1) * (d + 1) > n);
    }

    #[test]
    fn perfect_power_examples() {
        assert_eq!(as_perfect_rth_power(16, 2), Some(4));
        assert_eq!(as_perfect_rth_power(16, 3), None);
        assert_eq!(as_perfect_rth_power(17, 1), Some(17));
        assert_eq!(as_perfect_rth_power(1, 7), Some(1));
        assert_eq!(as_perfect_rth_power(3u64.pow(40), 40), Some(3));
        assert_eq!(as_perfect_rth_power(3u64.pow(40) - 1, 40), None);
    }

    #[test]
    fn fraction_sum_matches_sequential() {
        let terms: Vec<Rational> = (1..200).map(|d| psi_ratio(12345, d * d + 1)).collect();
        let seq = terms.iter().fold(Rational::zero(), |acc, t| acc + t);
        assert_eq!(sum_rationals(terms), seq);
        assert_eq!(sum_rationals(Vec::new()), Rational::zero());
    }

    #[test]
    fn pow_bounds_exact_and_certified() {
        let v = pow_bounds(&int(64), &rat(1, 3), 64).unwrap();
        assert_eq!(v, Interval::point(int(4)));
        let v = pow_bounds(&rat(100, 64), &int(1), 64).unwrap();
        assert_eq!(v.lo, rat(25, 16));
        let v = pow_bounds(&int(50), &rat(1, 3), 64).unwrap();
        assert!(!v.is_exact());
        // lo^3 <= 50 <= hi^3
        assert!(num_traits::pow(v.lo.clone(), 3) <= int(50));
        assert!(num_traits::pow(v.hi.clone(), 3) >= int(50));
        assert!(v.width() <= rat(1, 1 << 62));
        let v = pow_bounds(&int(8), &rat(-2, 3), 64).unwrap();
        assert_eq!(v, Interval::point(rat(1, 4)));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational(" -3/6 ").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1.5").is_err());
    }

    #[test]
    fn interval_abs() {
        let i = Interval::new(rat(-3, 1), rat(1, 1));
        assert_eq!(i.abs(), Interval::new(int(0), int(3)));
        let i = Interval::new(rat(-3, 1), rat(-1, 1));
        assert_eq!(i.abs(), Interval::new(int(1), int(3)));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-10_000i64..10_000, 1i64..500).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn psi_is_periodic(q in small_rational(), m in -1000i64..1000) {
            prop_assert_eq!(psi(&(&q + int(m))), psi(&q));
        }

        #[test]
        fn psi_range_and_reflection(q in small_rational()) {
            let v = psi(&q);
            prop_assert!(v >= rat(-1, 2) && v < half());
            // psi is odd away from the integers and equals -1/2 on them
            if q.is_integer() {
                prop_assert_eq!(v.clone(), rat(-1, 2));
                prop_assert_eq!(v + psi(&-q), int(-1));
            } else {
                prop_assert_eq!(v + psi(&-q), int(0));
            }
        }

        #[test]
        fn root_brackets_and_is_monotone(n in any::<u64>(), r in 1u32..12) {
            let d = integer_rth_root(n, r).unwrap();
            prop_assert!(pow_le(d, r, n));
            prop_assert!(!pow_le(d + 1, r, n));
            if n > 0 {
                prop_assert!(integer_rth_root(n - 1, r).unwrap() <= d);
            }
        }

        #[test]
        fn perfect_power_roundtrip(d in 1u64..5000, r in 1u32..5) {
            let n = d.pow(r);
            prop_assert_eq!(as_perfect_rth_power(n, r), Some(d));
            if n > 1 && r > 1 {
                prop_assert_eq!(as_perfect_rth_power(n + 1, r), None);
            }
        }
    }
}
