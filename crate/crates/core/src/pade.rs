//! Integer polynomial pairs `(P, Q)` of degree `l - 1` with
//! `P(x) (1 - x)^r - Q(x) = O(x^(2l-1))`, and their homogenizations.
//!
//! The coefficients are the kernel of a `(2l-1) x 2l` rational linear system,
//! solved by Gauss-Jordan elimination and scaled to the primitive integer
//! vector whose leading `P` coefficient is positive.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyPair {
    pub r: u32,
    pub l: u32,
    /// Ascending coefficients, length `l`.
    pub p: Vec<BigInt>,
    /// Ascending coefficients, length `l`.
    pub q: Vec<BigInt>,
}

fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Ascending coefficients of `(1 - x)^r`.
pub fn one_minus_x_pow(r: u32) -> Vec<BigInt> {
    (0..=r)
        .map(|j| {
            let b = binomial(r, j);
            if j % 2 == 0 {
                b
            } else {
                -b
            }
        })
        .collect()
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_rl(r: u32, l: u32) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("r = {r} must be >= 2")));
    }
    if l < 1 || l > r {
        return Err(Error::InvalidArgument(format!(
            "l = {l} must lie in [1, {r}]"
        )));
    }
    Ok(())
}

/// Rows of the system: coefficient of `x^j`, `j = 0..=2l-2`, in
/// `P(x)(1-x)^r - Q(x)`, over unknowns `p_0..p_{l-1}, q_0..q_{l-1}`.
fn system(r: u32, l: u32) -> Vec<Vec<Rational>> {
    let binom = one_minus_x_pow(r);
    let l = l as usize;
    (0..(2 * l - 1))
        .map(|j| {
            let mut row = vec![Rational::zero(); 2 * l];
            for (i, cell) in row.iter_mut().enumerate().take(l.min(j + 1)) {
                if let Some(c) = binom.get(j - i) {
                    *cell = Rational::from_integer(c.clone());
                }
            }
            if j < l {
                row[l + j] = -Rational::one();
            }
            row
        })
        .collect()
}

/// One-dimensional kernel of `rows`, visiting columns in `order` for pivots.
fn kernel_vector(mut rows: Vec<Vec<Rational>>, order: &[usize]) -> Result<Vec<Rational>> {
    let ncols = order.len();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for &col in order {
        if row == rows.len() {
            break;
        }
        let Some(sel) = (row..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(row, sel);
        let inv = rows[row][col].recip();
        for v in rows[row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = rows[row].clone();
        for (i, other) in rows.iter_mut().enumerate() {
            if i != row && !other[col].is_zero() {
                let factor = other[col].clone();
                for (v, p) in other.iter_mut().zip(&pivot_row) {
                    *v -= &factor * p;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let free: Vec<usize> = (0..ncols)
        .filter(|c| !pivots.iter().any(|&(_, pc)| pc == *c))
        .collect();
    if free.len() != 1 {
        return Err(Error::Verification(format!(
            "expected a one-dimensional solution space, found dimension {}",
            free.len()
        )));
    }
    let mut sol = vec![Rational::zero(); ncols];
    sol[free[0]] = Rational::one();
    for &(r, c) in &pivots {
        sol[c] = -rows[r][free[0]].clone();
    }
    Ok(sol)
}

/// Clears denominators and divides by the content.
fn primitive(sol: &[Rational]) -> Vec<BigInt> {
    let lcm = sol.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = sol
        .iter()
        .map(|v| (v * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    ints.into_iter().map(|v| v / &g).collect()
}

pub fn construct_pade(r: u32, l: u32) -> Result<PolyPair> {
    let order: Vec<usize> = (0..(2 * l as usize)).collect();
    construct_pade_with_pivots(r, l, &order)
}

/// Same as [`construct_pade`] with an explicit column order for pivoting.
pub fn construct_pade_with_pivots(r: u32, l: u32, order: &[usize]) -> Result<PolyPair> {
    check_rl(r, l)?;
    let n = 2 * l as usize;
    let mut seen = order.to_vec();
    seen.sort_unstable();
    if seen != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument(
            "pivot order must permute the unknowns".into(),
        ));
    }
    let sol = kernel_vector(system(r, l), order)?;
    let mut ints = primitive(&sol);
    if ints[l as usize - 1].is_negative() {
        for v in ints.iter_mut() {
            *v = -&*v;
        }
    }
    let q = ints.split_off(l as usize);
    let pair = PolyPair { r, l, p: ints, q };
    pair.verify()?;
    Ok(pair)
}

type PairCache = RwLock<HashMap<(u32, u32), Arc<PolyPair>>>;

static CACHE: OnceLock<PairCache> = OnceLock::new();

/// Memoized [`construct_pade`].
pub fn cached_pade(r: u32, l: u32) -> Result<Arc<PolyPair>> {
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.read().expect("pade cache poisoned").get(&(r, l)) {
        return Ok(p.clone());
    }
    let pair = Arc::new(construct_pade(r, l)?);
    cache
        .write()
        .expect("pade cache poisoned")
        .insert((r, l), pair.clone());
    Ok(pair)
}

impl PolyPair {
    /// Ascending coefficients of `P(x)(1-x)^r - Q(x)`.
    pub fn remainder_series(&self) -> Vec<BigInt> {
        let mut out = poly_mul(&self.p, &one_minus_x_pow(self.r));
        for (i, c) in self.q.iter().enumerate() {
            out[i] -= c;
        }
        out
    }

    /// Index of the lowest nonzero coefficient of the remainder series.
    pub fn remainder_order(&self) -> Result<usize> {
        self.remainder_series()
            .iter()
            .position(|c| !c.is_zero())
            .ok_or_else(|| Error::Verification("P(x)(1-x)^r - Q(x) vanishes identically".into()))
    }

    pub fn leading_p(&self) -> &BigInt {
        self.p.last().expect("l >= 1")
    }

    pub fn leading_q(&self) -> &BigInt {
        self.q.last().expect("l >= 1")
    }

    /// `(d^(l-1) P(a/d), d^(l-1) Q(a/d))`.
    pub fn homogenize_eval(&self, a: &BigInt, d: &BigInt) -> (BigInt, BigInt) {
        let eval = |coeffs: &[BigInt]| {
            let mut acc = BigInt::zero();
            let deg = coeffs.len() - 1;
            for (i, c) in coeffs.iter().enumerate() {
                acc += c * num_traits::pow(a.clone(), i) * num_traits::pow(d.clone(), deg - i);
            }
            acc
        };
        (eval(&self.p), eval(&self.q))
    }

    /// `K` with `|P0(a,d)(d-a)^r - Q0(a,d) d^r| <= K |a|^(2l-1) d^(r-l)` for `|a| <= d/2`:
    /// the sum of absolute remainder coefficients times `2^(r-l)`.
    pub fn bound_constant(&self) -> BigInt {
        let s: BigInt = self.remainder_series().iter().map(|c| c.abs()).sum();
        s << (self.r - self.l) as usize
    }

    /// Checks degrees, nonzero coefficients, `P(0) = Q(0)` and the vanishing
    /// of the remainder through `x^(2l-2)`.
    pub fn verify(&self) -> Result<()> {
        let l = self.l as usize;
        if self.p.len() != l || self.q.len() != l {
            return Err(Error::Verification(format!(
                "r={} l={}: expected {l} coefficients",
                self.r, self.l
            )));
        }
        if let Some(i) = self.p.iter().chain(&self.q).position(|c| c.is_zero()) {
            return Err(Error::Verification(format!(
                "r={} l={}: coefficient {i} of (P, Q) is zero",
                self.r, self.l
            )));
        }
        if self.p[0] != self.q[0] {
            return Err(Error::Verification("P(0) != Q(0)".into()));
        }
        let order = self.remainder_order()?;
        if order < 2 * l - 1 {
            return Err(Error::Verification(format!(
                "r={} l={}: remainder order {order} < {}",
                self.r,
                self.l,
                2 * l - 1
            )));
        }
        Ok(())
    }
}

fn fmt_poly(coeffs: &[BigInt]) -> String {
    let mut s = String::new();
    for (i, c) in coeffs.iter().enumerate() {
        let mag = c.abs();
        if i == 0 {
            s.push_str(&c.to_string());
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
            if !mag.is_one() {
                s.push_str(&mag.to_string());
            }
            s.push('x');
            if i > 1 {
                s.push_str(&format!("^{i}"));
            }
        }
    }
    s
}

impl fmt::Display for PolyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P = {}; Q = {}", fmt_poly(&self.p), fmt_poly(&self.q))
    }
}

/// Evaluates the remainder series at `a/d` and scales by `d^(r+l-1)`.
pub fn scaled_remainder(pair: &PolyPair, a: &BigInt, d: &BigInt) -> Rational {
    let deg = (pair.r + pair.l - 1) as usize;
    let mut acc = Rational::zero();
    for (j, c) in pair.remainder_series().iter().enumerate() {
        let t = Rational::new(num_traits::pow(a.clone(), j), num_traits::pow(d.clone(), j));
        acc += Rational::from_integer(c.clone()) * t;
    }
    acc * int(num_traits::pow(d.clone(), deg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn l_equals_one() {
        for r in 2..=6 {
            let p = construct_pade(r, 1).unwrap();
            assert_eq!(p.p, ints(&[1]));
            assert_eq!(p.q, ints(&[1]));
            assert_eq!(p.remainder_order().unwrap(), 1);
        }
    }

    #[test]
    fn r2_l2() {
        let p = construct_pade(2, 2).unwrap();
        assert_eq!(p.p, ints(&[2, 1]));
        assert_eq!(p.q, ints(&[2, -3]));
        assert_eq!(p.remainder_series(), ints(&[0, 0, 0, 1]));
        assert_eq!(p.remainder_order().unwrap(), 3);
        assert_eq!(p.to_string(), "P = 2 + x; Q = 2 - 3x");
    }

    #[test]
    fn r3_l2() {
        let p = construct_pade(3, 2).unwrap();
        assert_eq!(p.p, ints(&[1, 1]));
        assert_eq!(p.q, ints(&[1, -2]));
        assert_eq!(p.remainder_series(), ints(&[0, 0, 0, 2, -1]));
        assert_eq!(p.remainder_order().unwrap(), 3);
    }

    #[test]
    fn homogenize_examples() {
        let p = construct_pade(2, 2).unwrap();
        let h = |a: i64, d: i64| p.homogenize_eval(&BigInt::from(a), &BigInt::from(d));
        assert_eq!(h(1, 31), (BigInt::from(63), BigInt::from(59)));
        assert_eq!(h(2, 10), (BigInt::from(22), BigInt::from(14)));
        for (r, l) in [(3, 3), (5, 2), (4, 4)] {
            let p = construct_pade(r, l).unwrap();
            let d = BigInt::from(7);
            let (p0, q0) = p.homogenize_eval(&BigInt::zero(), &d);
            assert_eq!(p0, q0);
            assert_eq!(p0, &p.p[0] * num_traits::pow(d, l as usize - 1));
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(construct_pade(1, 1).is_err());
        assert!(construct_pade(3, 0).is_err());
        assert!(construct_pade(3, 4).is_err());
        assert!(construct_pade_with_pivots(2, 2, &[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn verify_rejects_tampering() {
        let mut p = construct_pade(4, 3).unwrap();
        p.q[1] += 1;
        assert!(p.verify().is_err());
        let mut p = construct_pade(4, 3).unwrap();
        p.p[1] = BigInt::zero();
        assert!(p.verify().is_err());
    }

    #[test]
    fn pivot_order_does_not_change_result() {
        for r in 2..=7u32 {
            for l in 1..=r {
                let base = construct_pade(r, l).unwrap();
                let n = 2 * l as usize;
                let rev: Vec<usize> = (0..n).rev().collect();
                let interleaved: Vec<usize> = (0..n)
                    .map(|i| if i % 2 == 0 { i / 2 } else { n - 1 - i / 2 })
                    .collect();
                assert_eq!(construct_pade_with_pivots(r, l, &rev).unwrap(), base);
                assert_eq!(
                    construct_pade_with_pivots(r, l, &interleaved).unwrap(),
                    base
                );
            }
        }
    }

    #[test]
    fn cache_returns_same_pair() {
        let a = cached_pade(5, 3).unwrap();
        let b = cached_pade(5, 3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, construct_pade(5, 3).unwrap());
    }

    proptest! {
        #[test]
        fn homogeneous_identity(r in 2u32..7, l_off in 0u32..6, a in -300i64..300, d in 1i64..2000) {
            let l = 1 + l_off % r;
            let pair = cached_pade(r, l).unwrap();
            let (a, d) = (BigInt::from(a), BigInt::from(d));
            let (p0, q0) = pair.homogenize_eval(&a, &d);
            let lhs = &p0 * num_traits::pow(&d - &a, r as usize) - &q0 * num_traits::pow(d.clone(), r as usize);
            prop_assert_eq!(Rational::from_integer(lhs.clone()), scaled_remainder(&pair, &a, &d));
            if a.abs() * 2 <= d {
                let bound = pair.bound_constant()
                    * num_traits::pow(a.abs(), 2 * l as usize - 1)
                    * num_traits::pow(d.clone(), (r - l) as usize);
                prop_assert!(lhs.abs() <= bound);
            }
        }
    }
}
