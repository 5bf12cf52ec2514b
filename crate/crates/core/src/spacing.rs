//! The set `T(D)` of `d in (D, 2D]` for which `d^r = floor(x/n)` has a
//! solution `n`, and finite checks of the machinery bounding its size: the
//! modified difference `P0(a,d) n1 - Q0(a,d) n2`, clustering of close
//! elements, and the count bound `(x / D^(r-l+1))^(1/(2l-1)) + 1`.
//!
//! The proof's constants are unspecified; [`SpacingConstants::shipped`]
//! holds values fixed with [`calibrate`].

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::PowerSupportedFunction;
use crate::error::{Error, Result};
use crate::exact::{
    big_rth_root, int, integer_rth_root, pow_bounds, rat, to_f64, Interval, Rational,
};
use crate::pade::cached_pade;

/// Configuration constants standing in for the unspecified proof constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacingConstants {
    /// `D >= range_c * x^(1/(2r+1-l))`.
    pub range_c: Rational,
    /// Gaps `a <= gap_c * L` must give a vanishing modified difference.
    pub gap_c: Rational,
    /// `|T(D)| <= count_c * bound_value`.
    pub count_c: Rational,
}

impl SpacingConstants {
    /// With `range_c = 1` the smallest violating `a / L` is about 5.6 on the
    /// calibration grid and about 1.3 over 400 further `x <= 1e7` with
    /// `r in {2, 3}`; the largest `count / bound_value` is 0.159 on the grid
    /// and 0.29 overall.
    pub fn shipped() -> Self {
        SpacingConstants {
            range_c: int(1),
            gap_c: int(1),
            count_c: rat(1, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacingReport {
    pub x: u64,
    pub r: u32,
    pub l: u32,
    pub d_param: u64,
    pub elements: Vec<u64>,
    pub count: usize,
    /// `(x / D^(r-l+1))^(1/(2l-1)) + 1`.
    pub bound_value: Option<Interval>,
    /// Largest number of elements within one window of length `gap_c * L`.
    pub max_cluster: Option<usize>,
    /// `L = D^((l+r)/(2l-1)) x^(-1/(2l-1))`.
    pub l_used: Option<Interval>,
}

fn r_power(d: u64, r: u32) -> Result<u64> {
    d.checked_pow(r).ok_or(Error::Overflow("d^r"))
}

fn check_rl(r: u32, l: u32) -> Result<()> {
    if r < 2 || l < 1 || l > r {
        return Err(Error::InvalidArgument(format!(
            "need r >= 2 and 1 <= l <= r, got r = {r}, l = {l}"
        )));
    }
    Ok(())
}

/// `floor(x/d^r) > floor(x/(d^r+1))`.
pub fn representable(x: u64, r: u32, d: u64) -> Result<bool> {
    let m = r_power(d, r)?;
    if d == 0 || m > x {
        return Err(Error::Precondition(format!(
            "need 1 <= d and d^r <= x (d = {d}, x = {x})"
        )));
    }
    Ok(x / m > x / (m + 1))
}

/// All `n` with `floor(x/n) = d^r`, ascending.
pub fn witnesses(x: u64, r: u32, d: u64) -> Result<Vec<u64>> {
    if !representable(x, r, d)? {
        return Err(Error::EmptyWitness(format!(
            "d = {d} is not representable for x = {x}, r = {r}"
        )));
    }
    let m = r_power(d, r)?;
    Ok(((x / (m + 1) + 1)..=(x / m)).collect())
}

/// `T(D)`: elements and count only.
pub fn t_of_d(x: u64, r: u32, d_param: u64) -> Result<SpacingReport> {
    if d_param < 1 {
        return Err(Error::InvalidArgument("D must be >= 1".into()));
    }
    let top = (2 * d_param).min(integer_rth_root(x, r)?);
    let mut elements = Vec::new();
    for d in (d_param + 1)..=top {
        if representable(x, r, d)? {
            elements.push(d);
        }
    }
    Ok(SpacingReport {
        x,
        r,
        l: 0,
        d_param,
        count: elements.len(),
        elements,
        bound_value: None,
        max_cluster: None,
        l_used: None,
    })
}

fn is_witness(x: u64, r: u32, d: u64, n: u64) -> Result<bool> {
    Ok(n >= 1 && x / n == r_power(d, r)?)
}

/// `P0(a,d) n1 - Q0(a,d) n2` with `n1` a witness for `d` and `n2` for `d - a`.
///
/// Since `n1 ~ x/d^r` and `n2 ~ x/(d-a)^r`, this orientation cancels the
/// leading terms through `P0 (d-a)^r ~ Q0 d^r`.
pub fn modified_difference(
    x: u64,
    r: u32,
    l: u32,
    d: u64,
    a: u64,
    n1: u64,
    n2: u64,
) -> Result<BigInt> {
    check_rl(r, l)?;
    if a >= d {
        return Err(Error::Precondition(format!(
            "need 0 <= a < d, got a = {a}, d = {d}"
        )));
    }
    if !is_witness(x, r, d, n1)? {
        return Err(Error::Precondition(format!(
            "n1 = {n1} is not a witness for d = {d}"
        )));
    }
    if !is_witness(x, r, d - a, n2)? {
        return Err(Error::Precondition(format!(
            "n2 = {n2} is not a witness for d - a = {}",
            d - a
        )));
    }
    let pair = cached_pade(r, l)?;
    let (p0, q0) = pair.homogenize_eval(&BigInt::from(a), &BigInt::from(d));
    Ok(p0 * BigInt::from(n1) - q0 * BigInt::from(n2))
}

/// Largest number of sorted integers within a window `[e, e + g]`.
fn max_cluster(elements: &[u64], max_gap: u64) -> usize {
    let mut best = 0;
    let mut j = 0;
    for i in 0..elements.len() {
        if j < i {
            j = i;
        }
        while j + 1 < elements.len() && elements[j + 1] - elements[i] <= max_gap {
            j += 1;
        }
        best = best.max(j + 1 - i);
    }
    best
}

/// Maximum number of elements of `T(D)` inside a half-open window of length `len`.
pub fn cluster_scan(x: u64, r: u32, d_param: u64, len: &Rational) -> Result<usize> {
    if !len.is_positive() {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    let t = t_of_d(x, r, d_param)?;
    // integer gaps g with g < len
    let max_gap = (len.ceil().to_integer() - 1u32)
        .to_u64()
        .unwrap_or(u64::MAX);
    Ok(max_cluster(&t.elements, max_gap))
}

/// `c^m D^(l+r) / x` with `m = 2l - 1`; the m-th power of `c * L`.
fn scaled_l_power(x: u64, r: u32, l: u32, d_param: u64, c: &Rational) -> Rational {
    let m = 2 * l as usize - 1;
    num_traits::pow(c.clone(), m) * int(num_traits::pow(BigInt::from(d_param), (l + r) as usize))
        / int(x)
}

/// Floor of the m-th root of a nonnegative rational, plus whether it is exact.
fn floor_root(t: &Rational, m: u32) -> (u64, bool) {
    let fl = t.floor().to_integer();
    let fl = fl.to_biguint().unwrap_or_else(BigUint::zero);
    let s = big_rth_root(&fl, m);
    let exact = t.is_integer() && s.pow(m) == fl;
    (s.to_u64().unwrap_or(u64::MAX), exact)
}

/// Largest integer `a` with `a <= c * L`.
pub fn max_gap_inclusive(x: u64, r: u32, l: u32, d_param: u64, c: &Rational) -> u64 {
    floor_root(&scaled_l_power(x, r, l, d_param, c), 2 * l - 1).0
}

/// Largest integer `g` with `g < c * L`.
pub fn max_gap_strict(x: u64, r: u32, l: u32, d_param: u64, c: &Rational) -> u64 {
    let (s, exact) = floor_root(&scaled_l_power(x, r, l, d_param, c), 2 * l - 1);
    if exact {
        s.saturating_sub(1)
    } else {
        s
    }
}

/// Fills the count bound, `L`, and the cluster size for windows of length `gap_c * L`.
pub fn spacing_bound_report(
    x: u64,
    r: u32,
    l: u32,
    d_param: u64,
    gap_c: &Rational,
) -> Result<SpacingReport> {
    check_rl(r, l)?;
    let mut report = t_of_d(x, r, d_param)?;
    report.l = l;
    let m = int(2 * l as i64 - 1);
    let base = int(x) / int(num_traits::pow(BigInt::from(d_param), (r - l + 1) as usize));
    let bound = pow_bounds(&base, &(Rational::one() / &m), 64)?.add_scalar(&Rational::one());
    let l_val = pow_bounds(&int(d_param), &(int(l + r) / &m), 64)?.mul_nonneg(&pow_bounds(
        &int(x),
        &(int(-1) / &m),
        64,
    )?);
    let gap = max_gap_strict(x, r, l, d_param, gap_c);
    report.max_cluster = Some(max_cluster(&report.elements, gap));
    report.bound_value = Some(bound);
    report.l_used = Some(l_val);
    Ok(report)
}

/// Dyadic `D = 2^j` with `D >= range_c * x^(1/(2r+1-l))` and `D < x^(1/r)`.
pub fn dyadic_grid(x: u64, r: u32, l: u32, range_c: &Rational) -> Result<Vec<u64>> {
    check_rl(r, l)?;
    let e = 2 * r + 1 - l;
    let need = num_traits::pow(range_c.clone(), e as usize) * int(x);
    let root = integer_rth_root(x, r)?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d < root {
        if int(num_traits::pow(BigInt::from(d), e as usize)) >= need {
            out.push(d);
        }
        d *= 2;
    }
    Ok(out)
}

/// A close pair `d, d - a` in `T(D)` with nonzero modified difference.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub d_param: u64,
    pub d: u64,
    pub a: u64,
    pub n1: u64,
    pub n2: u64,
    pub value: BigInt,
    /// `a / L`, approximate.
    pub gap_ratio: f64,
}

/// Every pair `d, d - a` in `T(D)` with `1 <= a <= a_max`, over all witnesses.
fn scan_pairs(x: u64, r: u32, l: u32, d_param: u64, a_max: u64) -> Result<(usize, Vec<Violation>)> {
    let t = t_of_d(x, r, d_param)?;
    let l_f = to_f64(&pow_bounds(&int(d_param), &(int(l + r) / int(2 * l as i64 - 1)), 64)?.lo)
        * (x as f64).powf(-1.0 / (2 * l - 1) as f64);
    let mut checked = 0usize;
    let mut bad = Vec::new();
    for (i, &d) in t.elements.iter().enumerate() {
        let w1 = witnesses(x, r, d)?;
        for &e in t.elements[..i].iter().rev() {
            let a = d - e;
            if a > a_max {
                break;
            }
            let w2 = witnesses(x, r, e)?;
            for &n1 in &w1 {
                for &n2 in &w2 {
                    checked += 1;
                    let v = modified_difference(x, r, l, d, a, n1, n2)?;
                    if !v.is_zero() {
                        bad.push(Violation {
                            d_param,
                            d,
                            a,
                            n1,
                            n2,
                            value: v,
                            gap_ratio: a as f64 / l_f,
                        });
                    }
                }
            }
        }
    }
    Ok((checked, bad))
}

/// Nonzero modified differences among pairs with `a <= gap_c * L`.
pub fn vanishing_violations(
    x: u64,
    r: u32,
    l: u32,
    d_param: u64,
    gap_c: &Rational,
) -> Result<(usize, Vec<Violation>)> {
    let a_max = max_gap_inclusive(x, r, l, d_param, gap_c);
    scan_pairs(x, r, l, d_param, a_max)
}

#[derive(Clone, Debug)]
pub struct Calibration {
    /// Smallest `a / L` over all violating pairs; any `gap_c` below it is safe.
    pub min_violating_ratio: Option<f64>,
    /// Largest `count / bound_value` over the grid.
    pub max_count_ratio: f64,
    pub reports: usize,
    pub pairs_checked: usize,
}

/// Measures the two empirical constants on a grid of `x` values.
pub fn calibrate(xs: &[u64], r: u32, l: u32, range_c: &Rational) -> Result<Calibration> {
    let jobs: Vec<(u64, u64)> = xs
        .iter()
        .map(|&x| dyadic_grid(x, r, l, range_c).map(|g| g.into_iter().map(move |d| (x, d))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let per_job: Vec<(f64, Option<f64>, usize)> = jobs
        .par_iter()
        .map(|&(x, d)| {
            let rep = spacing_bound_report(x, r, l, d, &Rational::one())?;
            let bound = to_f64(&rep.bound_value.as_ref().expect("filled").lo);
            let (checked, bad) = scan_pairs(x, r, l, d, d)?;
            let min_bad = bad
                .iter()
                .map(|v| v.gap_ratio)
                .fold(None, |acc: Option<f64>, g| {
                    Some(acc.map_or(g, |a| a.min(g)))
                });
            Ok((rep.count as f64 / bound, min_bad, checked))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cal = Calibration {
        min_violating_ratio: None,
        max_count_ratio: 0.0,
        reports: per_job.len(),
        pairs_checked: 0,
    };
    for (ratio, bad, checked) in per_job {
        cal.max_count_ratio = cal.max_count_ratio.max(ratio);
        cal.pairs_checked += checked;
        if let Some(b) = bad {
            cal.min_violating_ratio = Some(cal.min_violating_ratio.map_or(b, |m: f64| m.min(b)));
        }
    }
    Ok(cal)
}

/// Spacing estimate vs. trivial estimate for the small-`n` sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaggerComparison {
    /// `x^((l-1)/(r(2l-1)) + alpha/r) (A^((r+1-l)/(r(2l-1)) - alpha/r) + 1)`.
    pub spacing_value: Interval,
    /// `A (x/A)^(alpha/r)`.
    pub trivial_value: Interval,
    /// Exponent `t` of `A = x^t` above which the spacing estimate wins: `1/(2r+1)`.
    pub crossover_exponent: Rational,
}

pub fn dagger_bound_compare(
    r: u32,
    alpha: &Rational,
    l: u32,
    x: &Rational,
    a: &Rational,
) -> Result<DaggerComparison> {
    if r < 1 || l < 1 || l > r {
        return Err(Error::Range(format!(
            "need 1 <= l <= r, got l = {l}, r = {r}"
        )));
    }
    let (ri, li) = (int(r), int(l));
    let one = Rational::one();
    let m = int(2) * &li - &one;
    let alpha_max = (&ri + &one - &li) / &m;
    if alpha >= &alpha_max || alpha.is_negative() {
        return Err(Error::Range(format!(
            "alpha = {alpha} must lie in [0, (r+1-l)/(2l-1)) = [0, {alpha_max})"
        )));
    }
    if a < &one || x < a {
        return Err(Error::Range(format!(
            "need 1 <= A <= x, got A = {a}, x = {x}"
        )));
    }
    // A <= x^((r+1-l)/(2r+1-l))  <=>  A^(2r+1-l) <= x^(r+1-l)
    let lhs = num_traits::pow(a.clone(), (2 * r + 1 - l) as usize);
    let rhs = num_traits::pow(x.clone(), (r + 1 - l) as usize);
    if lhs > rhs {
        return Err(Error::Range(format!(
            "A = {a} exceeds x^((r+1-l)/(2r+1-l)) with r = {r}, l = {l}"
        )));
    }
    let e_x = (&li - &one) / (&ri * &m) + alpha / &ri;
    let e_a = (&ri + &one - &li) / (&ri * &m) - alpha / &ri;
    let spacing = pow_bounds(x, &e_x, 64)?.mul_nonneg(&pow_bounds(a, &e_a, 64)?.add_scalar(&one));
    let trivial = pow_bounds(&(x / a), &(alpha / &ri), 64)?.scale(a);
    Ok(DaggerComparison {
        spacing_value: spacing,
        trivial_value: trivial,
        crossover_exponent: one / (int(2) * ri + int(1)),
    })
}

/// `sum over dyadic blocks (D, 2D] of C (2D)^alpha |T(D)|`, plus the `d = 1` term.
///
/// Every `n < A <= sqrt(x)` has `floor(x/n) >= sqrt(x)`, so at most one such
/// `n` maps to each `d`, and this dominates `sum_{n < A} |f(floor(x/n))|`.
pub fn dyadic_majorant(f: &PowerSupportedFunction, x: u64) -> Result<Rational> {
    let r = f.r();
    let root = integer_rth_root(x, r)?;
    let mut total = if root >= 1 {
        f.c_growth().clone()
    } else {
        Rational::zero()
    };
    let mut d = 1u64;
    while d < root {
        let t = t_of_d(x, r, d)?;
        let w = pow_bounds(&int(2 * d), f.alpha(), 64)?.hi;
        total += f.c_growth() * w * int(t.count as u64);
        d *= 2;
    }
    Ok(total)
}
