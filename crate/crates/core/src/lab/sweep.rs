use std::io::{Read, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::arith::PowerSupportedFunction;
use crate::error::{Error, Result};
use crate::exact::{int, parse_rational, rat, to_decimal, Interval, Rational};
use crate::floor_sum::fast_sf;

pub const CSV_HEADER: [&str; 7] = [
    "x",
    "s_f",
    "cf_x_lo",
    "cf_x_hi",
    "abs_err_lo",
    "abs_err_hi",
    "abs_err_mid",
];

/// Smallest `eps` tried before giving up on the width rule.
pub fn eps_floor() -> Rational {
    Rational::new(1.into(), num_traits::pow(BigInt::from(10), 40))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub x: u64,
    pub s_f: Rational,
    /// Enclosure of `C_f x`.
    pub cf_x: Interval,
    /// Enclosure of `|S_f - C_f x|`.
    pub abs_err: Interval,
}

impl SweepRow {
    pub fn new(x: u64, s_f: Rational, cf: &Interval) -> Self {
        let cf_x = cf.scale(&int(x));
        let err = Interval::new(&s_f - &cf_x.hi, &s_f - &cf_x.lo);
        SweepRow {
            x,
            s_f,
            abs_err: err.abs(),
            cf_x,
        }
    }

    /// Width below 1% of the midpoint, or an exact zero.
    pub fn is_sharp(&self) -> bool {
        let w = self.abs_err.width();
        w.is_zero() || w * int(100) < self.abs_err.mid()
    }
}

/// `sweep_with(.., parallel = true)`.
pub fn sweep(f: &PowerSupportedFunction, grid: &[u64], eps: &Rational) -> Result<Vec<SweepRow>> {
    sweep_with(f, grid, eps, true)
}

/// One row per `x`. `eps` is divided by 1000 until the largest `x` has a
/// sharp error enclosure, down to [`eps_floor`].
pub fn sweep_with(
    f: &PowerSupportedFunction,
    grid: &[u64],
    eps: &Rational,
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "grid must be strictly ascending".into(),
        ));
    }
    let Some(&x_max) = grid.last() else {
        return Ok(Vec::new());
    };
    let s: Vec<Rational> = if parallel {
        grid.par_iter().map(|&x| fast_sf(f, x)).collect()
    } else {
        grid.iter().map(|&x| fast_sf(f, x)).collect()
    };
    let mut eps = eps.clone();
    let floor = eps_floor();
    let cf = loop {
        let cf = cf_dyadic(f, &eps)?;
        let last = SweepRow::new(x_max, s.last().expect("nonempty").clone(), &cf);
        if last.is_sharp() || eps <= floor {
            break cf;
        }
        eps /= int(1000);
    };
    Ok(grid
        .iter()
        .zip(s)
        .map(|(&x, s_f)| SweepRow::new(x, s_f, &cf))
        .collect())
}

/// `compute_cf(eps/2)` rounded outward to a dyadic grid of step `<= eps/4`,
/// so the CSV carries short exact endpoints and the width stays `<= eps`.
pub fn cf_dyadic(f: &PowerSupportedFunction, eps: &Rational) -> Result<Interval> {
    let cf = f.compute_cf(&(eps / int(2)))?;
    if cf.is_exact() {
        return Ok(cf);
    }
    let mut bits = 0u32;
    while int(BigInt::one() << bits) * eps < int(4) {
        bits += 1;
    }
    Ok(cf.outward_dyadic(bits))
}

fn parse_field(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<Rational> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::Parse(format!("missing column {name}")))?;
    parse_rational(raw)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for row in rows {
        w.write_record([
            row.x.to_string(),
            row.s_f.to_string(),
            row.cf_x.lo.to_string(),
            row.cf_x.hi.to_string(),
            row.abs_err.lo.to_string(),
            row.abs_err.hi.to_string(),
            to_decimal(&row.abs_err.mid(), 12),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Reads rows back by column name; the decimal column is ignored.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name}")))
    };
    let idx: Vec<usize> = CSV_HEADER[..6]
        .iter()
        .map(|n| col(n))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let x = parse_field(&rec, idx[0], "x")?;
        if !x.is_integer() || !x.is_positive() {
            return Err(Error::Parse(format!("x = {x} is not a positive integer")));
        }
        let x = x
            .to_integer()
            .try_into()
            .map_err(|_| Error::Overflow("x"))?;
        let row = SweepRow {
            x,
            s_f: parse_field(&rec, idx[1], "s_f")?,
            cf_x: Interval::new(
                parse_field(&rec, idx[2], "cf_x_lo")?,
                parse_field(&rec, idx[3], "cf_x_hi")?,
            ),
            abs_err: Interval::new(
                parse_field(&rec, idx[4], "abs_err_lo")?,
                parse_field(&rec, idx[5], "abs_err_hi")?,
            ),
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Default `eps` for sweeps.
pub fn default_sweep_eps() -> Rational {
    rat(1, 1_000_000_000)
}
