//! Arithmetic functions supported on r-th powers and the constant
//! `C_f = sum_n f(n) / (n (n + 1))`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{
    half as half_q, int, parse_rational, pow_bounds, rat, sum_fractions, Interval, Rational,
};

/// Terms of the C_f series summed exactly; later terms go through a
/// fixed-point enclosure.
const EXACT_TERMS: u64 = 2048;
const FIXED_BITS: usize = 128;
const MAX_TERMS: u64 = 1 << 26;

/// The weight `h` attached to each r-th power.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HKind {
    /// `h(d) = c`.
    Const(Rational),
    /// `h(d) = d^a`.
    Pow(u32),
}

impl FromStr for HKind {
    type Err = Error;

    /// `one`, `const:<p>/<q>` or `pow:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "one" {
            return Ok(HKind::Const(Rational::one()));
        }
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(HKind::Const(parse_rational(c)?));
        }
        if let Some(a) = s.strip_prefix("pow:") {
            let a: u32 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            return Ok(HKind::Pow(a));
        }
        Err(Error::Parse(format!(
            "h must be `one`, `const:<p>/<q>` or `pow:<a>`, got {s:?}"
        )))
    }
}

impl fmt::Display for HKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HKind::Const(c) if c.is_one() => write!(f, "one"),
            HKind::Const(c) => write!(f, "const:{c}"),
            HKind::Pow(a) => write!(f, "pow:{a}"),
        }
    }
}

/// `f(n) = h(d)` when `n = d^r`, and `0` otherwise, together with a growth
/// envelope `|h(d)| <= c_growth * d^alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSupportedFunction {
    r: u32,
    h: HKind,
    alpha: Rational,
    c_growth: Rational,
}

impl PowerSupportedFunction {
    /// Builds `f` with the tightest envelope for its family: `alpha = 0`,
    /// `C = |c|` for constants and `alpha = a`, `C = 1` for monomials.
    pub fn new(r: u32, h: HKind) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("r must be >= 1".into()));
        }
        let (alpha, c_growth) = match &h {
            HKind::Const(c) => (Rational::zero(), c.abs()),
            HKind::Pow(a) => (int(*a), Rational::one()),
        };
        Ok(PowerSupportedFunction {
            r,
            h,
            alpha,
            c_growth,
        })
    }

    pub fn one(r: u32) -> Self {
        Self::new(r, HKind::Const(Rational::one())).expect("r >= 1")
    }

    /// Replaces the envelope with a looser one. The new envelope must still
    /// dominate `h`, which for these families means `alpha >= alpha_0` and
    /// `c_growth >= c_0`.
    pub fn with_envelope(mut self, alpha: Rational, c_growth: Rational) -> Result<Self> {
        let base = Self::new(self.r, self.h.clone())?;
        if alpha < base.alpha || c_growth < base.c_growth {
            return Err(Error::InvalidArgument(format!(
                "envelope C*d^alpha with alpha={alpha}, C={c_growth} does not dominate h = {}",
                self.h
            )));
        }
        self.alpha = alpha;
        self.c_growth = c_growth;
        Ok(self)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn h(&self) -> &HKind {
        &self.h
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn c_growth(&self) -> &Rational {
        &self.c_growth
    }

    /// `h(d) = coeff() * weight(d)`.
    pub fn coeff(&self) -> Rational {
        match &self.h {
            HKind::Const(c) => c.clone(),
            HKind::Pow(_) => Rational::one(),
        }
    }

    /// Exponent `a` of the integer part `d^a` of `h`.
    pub fn weight_exponent(&self) -> u32 {
        match &self.h {
            HKind::Const(_) => 0,
            HKind::Pow(a) => *a,
        }
    }

    pub fn weight(&self, d: u64) -> BigInt {
        num_traits::pow(BigInt::from(d), self.weight_exponent() as usize)
    }

    pub fn eval_h(&self, d: u64) -> Rational {
        match &self.h {
            HKind::Const(c) => c.clone(),
            HKind::Pow(a) => int(num_traits::pow(BigInt::from(d), *a as usize)),
        }
    }

    pub fn eval_f(&self, n: u64) -> Rational {
        match crate::exact::as_perfect_rth_power(n, self.r) {
            Some(d) => self.eval_h(d),
            None => Rational::zero(),
        }
    }

    /// `2r - 1`, the convergence threshold for `alpha`.
    pub fn alpha_limit(&self) -> Rational {
        int(2 * self.r as i64 - 1)
    }

    /// Certified enclosure of `C_f` of width at most `eps`.
    pub fn compute_cf(&self, eps: &Rational) -> Result<Interval> {
        if !eps.is_positive() {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        let limit = self.alpha_limit();
        if self.alpha >= limit {
            return Err(Error::Divergent {
                alpha: self.alpha.to_string(),
                limit: limit.to_string(),
            });
        }
        let coeff = self.coeff();
        if self.r == 1 {
            // alpha < 1 forces a constant h, and sum 1/(n(n+1)) telescopes to 1.
            return Ok(Interval::point(coeff));
        }
        let n = match self.truncation_point(eps) {
            Ok(n) => n,
            Err(Error::Range(_)) => return self.cf_refined(eps),
            Err(e) => return Err(e),
        };
        let tail = self.cf_tail_majorant(n)?;
        let partial = self.cf_partial(n);
        let enclosure = if coeff.is_negative() {
            Interval::new(&partial.lo - &tail, partial.hi)
        } else {
            Interval::new(partial.lo.clone(), &partial.hi + &tail)
        };
        Ok(enclosure)
    }

    /// Enclosure of `sum_{d <= n} h(d) / (d^r (d^r + 1))`: exact up to
    /// `EXACT_TERMS`, fixed point beyond.
    fn cf_partial(&self, n: u64) -> Interval {
        let exact_n = n.min(EXACT_TERMS);
        let mut partial = Interval::point(self.cf_partial_sum(exact_n));
        if n > exact_n {
            partial = partial.add(&self.cf_partial_enclosure(exact_n, n).scale(&self.coeff()));
        }
        partial
    }

    /// Two-sided enclosure of `sum_{d > n} d^a / (d^r (d^r + 1))`, `a` the
    /// exponent of `h`.
    ///
    /// With `s = 2r - a` the term lies in `[d^-s - d^-(s+r), d^-s]`, and for the
    /// convex `t^-s` the midpoint and trapezoid rules give
    /// `(n+1)^(1-s)/(s-1) + (n+1)^-s/2 <= sum_{d > n} d^-s <= (n+1/2)^(1-s)/(s-1)`.
    pub fn cf_tail_enclosure(&self, n: u64) -> Interval {
        let s = 2 * self.r - self.weight_exponent();
        let zeta_hi = |s: u32| {
            let m = int(n) + half_q();
            num_traits::pow(m, s as usize - 1).recip() / int(s - 1)
        };
        let zeta_lo = |s: u32| {
            let m = int(n + 1);
            num_traits::pow(m.clone(), s as usize - 1).recip() / int(s - 1)
                + num_traits::pow(m, s as usize).recip() / int(2)
        };
        Interval::new(zeta_lo(s) - zeta_hi(s + self.r), zeta_hi(s))
    }

    /// Fallback when the envelope majorant would need more than `MAX_TERMS`
    /// terms: the two-sided tail of [`Self::cf_tail_enclosure`].
    fn cf_refined(&self, eps: &Rational) -> Result<Interval> {
        let coeff = self.coeff().abs();
        let half_eps = eps / int(2);
        let mut n = EXACT_TERMS;
        while self.cf_tail_enclosure(n).width() * &coeff > half_eps {
            n *= 2;
            if n > MAX_TERMS {
                return Err(Error::Range(format!(
                    "eps = {eps} needs more than {MAX_TERMS} terms of the C_f series for {self}"
                )));
            }
        }
        let partial = self.cf_partial(n);
        let tail = self.cf_tail_enclosure(n).scale(&self.coeff());
        let enclosure = partial.add(&tail);
        if &enclosure.width() > eps {
            return Err(Error::Range(format!(
                "eps = {eps} is below the fixed-point resolution"
            )));
        }
        Ok(enclosure)
    }

    /// Enclosure of `sum_{from < d <= to} weight(d) / (d^r (d^r + 1))` with
    /// each term rounded outward to a multiple of `2^-FIXED_BITS`.
    fn cf_partial_enclosure(&self, from: u64, to: u64) -> Interval {
        let mut lo = BigUint::zero();
        let mut inexact = 0u64;
        for d in (from + 1)..=to {
            let dr = num_traits::pow(BigUint::from(d), self.r as usize);
            let den = &dr * (&dr + 1u32);
            let num =
                num_traits::pow(BigUint::from(d), self.weight_exponent() as usize) << FIXED_BITS;
            let (q, rem) = num.div_rem(&den);
            lo += q;
            if !rem.is_zero() {
                inexact += 1;
            }
        }
        let scale = BigInt::one() << FIXED_BITS;
        let hi = BigInt::from(&lo + inexact);
        Interval::new(
            Rational::new(lo.into(), scale.clone()),
            Rational::new(hi, scale),
        )
    }

    /// `sum_{d <= n} h(d) / (d^r (d^r + 1))`, exact.
    pub fn cf_partial_sum(&self, n: u64) -> Rational {
        let terms = (1..=n)
            .map(|d| {
                let dr = num_traits::pow(BigInt::from(d), self.r as usize);
                let den = &dr * (&dr + 1u32);
                (self.weight(d), den)
            })
            .collect();
        sum_fractions(terms) * self.coeff()
    }

    /// Upper bound for `C * sum_{d > n} d^(alpha - 2r)` by integral comparison:
    /// `C * (n^(alpha-2r+1) / (2r-1-alpha) + n^(alpha-2r))`.
    pub fn cf_tail_majorant(&self, n: u64) -> Result<Rational> {
        let n_q = int(n);
        let e1 = &self.alpha - int(2 * self.r as i64 - 1);
        let e0 = &self.alpha - int(2 * self.r as i64);
        let t1 = pow_bounds(&n_q, &e1, 64)?.hi;
        let t0 = pow_bounds(&n_q, &e0, 64)?.hi;
        let gap = self.alpha_limit() - &self.alpha;
        Ok(&self.c_growth * (t1 / gap + t0))
    }

    /// Smallest `n` (up to a factor-of-two search) whose tail majorant is at most `eps`.
    fn truncation_point(&self, eps: &Rational) -> Result<u64> {
        let mut hi = 1u64;
        while &self.cf_tail_majorant(hi)? > eps {
            hi *= 2;
            if hi > MAX_TERMS {
                return Err(Error::Range(format!(
                    "eps = {eps} needs more than {MAX_TERMS} terms of the C_f series for {self}"
                )));
            }
        }
        let mut lo = hi / 2;
        if lo == 0 {
            return Ok(hi);
        }
        // tail(lo) > eps >= tail(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if &self.cf_tail_majorant(mid)? > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

impl fmt::Display for PowerSupportedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "r={} h={} (|h(d)| <= {} d^{})",
            self.r, self.h, self.c_growth, self.alpha
        )
    }
}

/// Default tolerance used by reports that do not ask for a specific one.
pub fn default_cf_eps() -> Rational {
    rat(1, 1_000_000_000)
}
