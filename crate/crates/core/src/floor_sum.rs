//! Exact evaluation of `S_f(x) = sum_{n <= x} f(floor(x/n))` and of the
//! pieces of its three-way split.
//!
//! Every sum of `h` values is accumulated as an integer `sum weight(d) * count`
//! and multiplied by the constant `coeff` once at the end, so no partial
//! result is ever rounded.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::arith::PowerSupportedFunction;
use crate::error::{Error, Result};
use crate::exact::{
    as_perfect_rth_power, floor_div, floor_u64, int, integer_rth_root, psi_ratio_raw,
    sum_fractions, Interval, Rational,
};

/// Integer accumulator that stays in `u128` until it would overflow.
#[derive(Default)]
struct WeightedSum {
    small: u128,
    big: BigInt,
}

impl WeightedSum {
    fn add(&mut self, f: &PowerSupportedFunction, d: u64, count: u64) {
        if count == 0 {
            return;
        }
        let a = f.weight_exponent();
        let term = (d as u128)
            .checked_pow(a)
            .and_then(|w| w.checked_mul(count as u128));
        match term.and_then(|t| self.small.checked_add(t)) {
            Some(s) => self.small = s,
            None => self.big += f.weight(d) * BigInt::from(count),
        }
    }

    fn finish(self, f: &PowerSupportedFunction) -> Rational {
        int(self.big + BigInt::from(self.small)) * f.coeff()
    }
}

fn r_power(d: u64, r: u32) -> u64 {
    d.checked_pow(r).expect("d^r <= x fits in u64")
}

/// `floor(x / m)` for `m` that may exceed `u64`.
fn floor_div_wide(x: u64, m: u128) -> u64 {
    (x as u128 / m) as u64
}

/// Number of `n` with `floor(x/n) = d^r`, i.e. `floor(x/d^r) - floor(x/(d^r+1))`.
pub fn block_count(x: u64, r: u32, d: u64) -> u64 {
    let m = r_power(d, r) as u128;
    floor_div_wide(x, m) - floor_div_wide(x, m + 1)
}

/// Number of `n > floor_b` with `floor(x/n) = d^r`.
fn clamped_block_count(x: u64, r: u32, d: u64, floor_b: u64) -> u64 {
    let m = r_power(d, r) as u128;
    let top = floor_div_wide(x, m);
    let bottom = floor_div_wide(x, m + 1).max(floor_b);
    top.saturating_sub(bottom)
}

/// Largest `d` with `d^r <= x / a`, i.e. `floor((x/a)^(1/r))`.
pub fn root_of_quotient(x: u64, a: &Rational, r: u32) -> u64 {
    integer_rth_root(floor_div(x, a), r).expect("r >= 1")
}

/// Largest `d` with `d^r < x / b` (strict).
pub fn root_of_quotient_strict(x: u64, b: &Rational, r: u32) -> u64 {
    // d^r * p < x * q  <=>  d^r <= floor((x q - 1) / p)
    let (p, q) = (b.numer(), b.denom());
    let m = (BigInt::from(x) * q - 1u32) / p;
    let m = if m.is_negative() {
        0
    } else {
        num_traits::ToPrimitive::to_u64(&m).unwrap_or(u64::MAX)
    };
    integer_rth_root(m, r).expect("r >= 1")
}

/// Direct loop over `n <= x`. Reference oracle; cost `Theta(x)`.
pub fn brute_sf(f: &PowerSupportedFunction, x: u64) -> Rational {
    let mut acc = WeightedSum::default();
    for n in 1..=x {
        if let Some(d) = as_perfect_rth_power(x / n, f.r()) {
            acc.add(f, d, 1);
        }
    }
    acc.finish(f)
}

/// Sum over `d` with `d^r <= x` of `h(d)` times the number of `n` with
/// `floor(x/n) = d^r`. Cost `Theta(x^(1/r))`.
pub fn fast_sf(f: &PowerSupportedFunction, x: u64) -> Rational {
    let r = f.r();
    let d_max = integer_rth_root(x, r).expect("r >= 1");
    let mut acc = WeightedSum::default();
    for d in 1..=d_max {
        acc.add(f, d, block_count(x, r, d));
    }
    acc.finish(f)
}

/// `sum_{n < a} f(floor(x/n))`, or `n <= a` when `inclusive`.
pub fn sf_dagger(
    f: &PowerSupportedFunction,
    x: u64,
    a: &Rational,
    inclusive: bool,
) -> Result<Rational> {
    if a < &int(1) {
        return Err(Error::Precondition(format!("A = {a} must be >= 1")));
    }
    let n_max = if inclusive {
        floor_u64(a)
    } else {
        // largest integer strictly below a
        let fl = floor_u64(a);
        if a.is_integer() {
            fl - 1
        } else {
            fl
        }
    };
    Ok(dagger_upto(f, x, n_max.min(x)))
}

fn dagger_upto(f: &PowerSupportedFunction, x: u64, n_max: u64) -> Rational {
    let mut acc = WeightedSum::default();
    for n in 1..=n_max {
        if let Some(d) = as_perfect_rth_power(x / n, f.r()) {
            acc.add(f, d, 1);
        }
    }
    acc.finish(f)
}

/// `S_f(x) = dagger + flat + sharp + boundary_correction`.
///
/// * `dagger`: `n <= floor(B)`, summed directly.
/// * `sharp`: `d <= floor((x/A)^(1/r))`, with `n` restricted to `n > floor(B)`.
/// * `flat`: the remaining `d`, same `n` restriction.
///
/// `boundary_correction` is `fast_sf - (dagger + flat + sharp)`; it is zero
/// whenever the conventions above partition `1..=x` correctly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub x: u64,
    pub a: Rational,
    pub b: Rational,
    pub dagger: Rational,
    pub flat: Rational,
    pub sharp: Rational,
    pub boundary_correction: Rational,
}

impl Decomposition {
    pub fn total(&self) -> Rational {
        &self.dagger + &self.flat + &self.sharp + &self.boundary_correction
    }
}

fn check_ab(x: u64, a: &Rational, b: &Rational) -> Result<()> {
    if b < &int(1) {
        return Err(Error::Precondition(format!("B = {b} must be >= 1")));
    }
    if b > a {
        return Err(Error::Precondition(format!("B = {b} must be <= A = {a}")));
    }
    if a > &int(x) {
        return Err(Error::Precondition(format!("A = {a} must be <= x = {x}")));
    }
    Ok(())
}

pub fn decompose(
    f: &PowerSupportedFunction,
    x: u64,
    a: &Rational,
    b: &Rational,
) -> Result<Decomposition> {
    check_ab(x, a, b)?;
    let r = f.r();
    let floor_b = floor_u64(b);
    let dagger = dagger_upto(f, x, floor_b);
    let d_sharp = root_of_quotient(x, a, r);
    // beyond d_top no n > floor(B) can satisfy floor(x/n) = d^r
    let d_top = integer_rth_root(x / (floor_b + 1), r).expect("r >= 1");

    let mut sharp = WeightedSum::default();
    for d in 1..=d_sharp {
        sharp.add(f, d, clamped_block_count(x, r, d, floor_b));
    }
    let mut flat = WeightedSum::default();
    for d in (d_sharp + 1)..=d_top {
        flat.add(f, d, clamped_block_count(x, r, d, floor_b));
    }
    let (sharp, flat) = (sharp.finish(f), flat.finish(f));
    let boundary_correction = fast_sf(f, x) - &dagger - &flat - &sharp;
    Ok(Decomposition {
        x,
        a: a.clone(),
        b: b.clone(),
        dagger,
        flat,
        sharp,
        boundary_correction,
    })
}

/// The unrestricted large-`n` piece `sum_{d <= (x/A)^(1/r)} h(d) (floor(x/d^r) - floor(x/(d^r+1)))`.
pub fn sharp_sum(f: &PowerSupportedFunction, x: u64, a: &Rational) -> Rational {
    let r = f.r();
    let mut acc = WeightedSum::default();
    for d in 1..=root_of_quotient(x, a, r) {
        acc.add(f, d, block_count(x, r, d));
    }
    acc.finish(f)
}

/// `x * sum_{d <= (x/A)^(1/r)} h(d) / (d^r (d^r + 1))`.
pub fn sharp_main_term(f: &PowerSupportedFunction, x: u64, a: &Rational) -> Rational {
    let r = f.r();
    let terms = (1..=root_of_quotient(x, a, r))
        .map(|d| {
            let m = BigInt::from(r_power(d, r));
            let den = &m * (&m + 1u32);
            (f.weight(d), den)
        })
        .collect();
    sum_fractions(terms) * f.coeff() * int(x)
}

fn check_delta(delta: u32) -> Result<()> {
    if delta > 1 {
        return Err(Error::InvalidArgument(format!(
            "delta must be 0 or 1, got {delta}"
        )));
    }
    Ok(())
}

/// `sum_{lo <= d <= hi} weight(d) psi(x / (d^r + delta))` times `coeff`.
fn weighted_psi_sum(f: &PowerSupportedFunction, x: u64, lo: u64, hi: u64, delta: u32) -> Rational {
    let r = f.r();
    let terms = (lo..=hi)
        .map(|d| {
            let m = r_power(d, r) + delta as u64;
            let (n, den) = psi_ratio_raw(x, m);
            (n * f.weight(d), den)
        })
        .collect();
    sum_fractions(terms) * f.coeff()
}

/// `sum_{d <= (x/A)^(1/r)} h(d) psi(x / (d^r + delta))`.
pub fn e_sharp(f: &PowerSupportedFunction, x: u64, a: &Rational, delta: u32) -> Result<Rational> {
    check_delta(delta)?;
    if a < &int(1) {
        return Err(Error::Precondition(format!("A = {a} must be >= 1")));
    }
    let hi = root_of_quotient(x, a, f.r());
    Ok(weighted_psi_sum(f, x, 1, hi, delta))
}

/// `sum_{(x/A)^(1/r) < d < (x/B)^(1/r)} h(d) psi(x / (d^r + delta))`.
pub fn e_flat(
    f: &PowerSupportedFunction,
    x: u64,
    a: &Rational,
    b: &Rational,
    delta: u32,
) -> Result<Rational> {
    check_delta(delta)?;
    if b < &int(1) || b > a {
        return Err(Error::Precondition(format!(
            "need 1 <= B <= A, got A = {a}, B = {b}"
        )));
    }
    let lo = root_of_quotient(x, a, f.r()) + 1;
    let hi = root_of_quotient_strict(x, b, f.r());
    if lo > hi {
        return Ok(Rational::zero());
    }
    Ok(weighted_psi_sum(f, x, lo, hi, delta))
}

/// `|E_flat(0)| + |E_flat(1)| + |E_sharp(0)| + |E_sharp(1)|`.
pub fn e_total(f: &PowerSupportedFunction, x: u64, a: &Rational, b: &Rational) -> Result<Rational> {
    let mut total = Rational::zero();
    for delta in 0..=1 {
        total += e_flat(f, x, a, b, delta)?.abs();
        total += e_sharp(f, x, a, delta)?.abs();
    }
    Ok(total)
}

/// `sum_{n <= x^(1/(r+1))} psi(x / (n^r + delta))`.
pub fn conjecture_psi_sum(r: u32, x: u64, delta: u32) -> Result<Rational> {
    check_delta(delta)?;
    if r < 2 {
        return Err(Error::Precondition(format!("r = {r} must be >= 2")));
    }
    let n_max = integer_rth_root(x, r + 1)?;
    let terms = (1..=n_max)
        .map(|n| psi_ratio_raw(x, r_power(n, r) + delta as u64))
        .collect();
    Ok(sum_fractions(terms))
}

/// Certified enclosure of `max_{n0 < n' <= n1} |sum_{n0 < n <= n'} psi(x / (n^r + delta))|`.
///
/// Each term is rounded outward to a multiple of `2^-64`, so the running sums
/// stay in `i128`; the exact rational sums over thousands of distinct
/// denominators are far too large to carry for every prefix.
pub fn max_partial_psi_abs(x: u64, r: u32, delta: u32, n0: u64, n1: u64) -> Result<Interval> {
    check_delta(delta)?;
    const ONE: i128 = 1 << 64;
    let mut lo: i128 = 0;
    let mut hi: i128 = 0;
    let mut best_lo: i128 = 0;
    let mut best_hi: i128 = 0;
    for n in (n0 + 1)..=n1 {
        let m = n
            .checked_pow(r)
            .and_then(|v| v.checked_add(delta as u64))
            .ok_or(Error::Overflow("n^r + delta"))?;
        let rem = (x % m) as u128;
        let scaled = rem << 64;
        let q = (scaled / m as u128) as i128;
        let exact = scaled.is_multiple_of(m as u128);
        lo += q - ONE / 2;
        hi += q - ONE / 2 + if exact { 0 } else { 1 };
        // |s| lies in [mag_lo, mag_hi] for the true prefix sum s in [lo, hi]
        let mag_hi = lo.abs().max(hi.abs());
        let mag_lo = if lo <= 0 && hi >= 0 {
            0
        } else {
            lo.abs().min(hi.abs())
        };
        best_hi = best_hi.max(mag_hi);
        best_lo = best_lo.max(mag_lo);
    }
    let scale = BigInt::from(ONE);
    Ok(Interval::new(
        Rational::new(BigInt::from(best_lo), scale.clone()),
        Rational::new(BigInt::from(best_hi), scale),
    ))
}
