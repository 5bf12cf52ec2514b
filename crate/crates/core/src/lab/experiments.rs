use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{int, psi_ratio_raw, sum_fractions, to_f64, Interval, Rational};
use crate::exp_pairs::{gk_bound, ExponentPair};
use crate::floor_sum::conjecture_psi_sum;
use crate::lab::fit::{fit_points, FitOutcome};
use crate::spacing::{
    dyadic_grid, spacing_bound_report, vanishing_violations, SpacingConstants, SpacingReport,
    Violation,
};

/// Constant recorded from the block check at `x = 1e8`, `r = 2`, pair `(2/7, 4/7)`,
/// where the largest `|block| / bound` is about 0.17 for both delta.
pub const GK_CONSTANT: i64 = 1;

/// `conjecture_psi_sum(r, x, delta)` over a grid, and the fit of its absolute value.
pub fn psi_fit(r: u32, delta: u32, grid: &[u64]) -> Result<(Vec<(u64, Rational)>, FitOutcome)> {
    let values: Vec<(u64, Rational)> = grid
        .par_iter()
        .map(|&x| conjecture_psi_sum(r, x, delta).map(|v| (x, v)))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = values
        .iter()
        .map(|(x, v)| (*x as f64, to_f64(&v.abs())))
        .collect();
    let fit = fit_points(&points)?;
    Ok((values, fit))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GkBlock {
    pub n0: u64,
    pub n1: u64,
    /// `sum_{n0 < n <= n1} psi(x / (n^r + delta))`, exact.
    pub sum: Rational,
    /// `gk_bound(pair, x, n0, r)`.
    pub bound: Interval,
    /// `|sum| / bound.lo`.
    pub ratio: f64,
}

/// Dyadic blocks `(N, 2N]`, `N = 1, 2, 4, ...`, with `2N <= n_max`.
pub fn gk_blocks(
    pair: &ExponentPair,
    x: u64,
    r: u32,
    delta: u32,
    n_max: u64,
) -> Result<Vec<GkBlock>> {
    let mut ns = Vec::new();
    let mut n = 1u64;
    while 2 * n <= n_max {
        ns.push(n);
        n *= 2;
    }
    ns.par_iter()
        .map(|&n0| {
            let n1 = 2 * n0;
            let terms = ((n0 + 1)..=n1)
                .map(|n| {
                    let m = n
                        .checked_pow(r)
                        .and_then(|v| v.checked_add(delta as u64))
                        .ok_or(Error::Overflow("n^r + delta"))?;
                    Ok(psi_ratio_raw(x, m))
                })
                .collect::<Result<Vec<_>>>()?;
            let sum = sum_fractions(terms);
            let bound = gk_bound(pair, &int(x), n0, r)?;
            let ratio = to_f64(&sum.abs()) / to_f64(&bound.lo);
            Ok(GkBlock {
                n0,
                n1,
                sum,
                bound,
                ratio,
            })
        })
        .collect()
}

/// Exact check of `|sum| <= c * bound.lo` for every block.
pub fn gk_holds(blocks: &[GkBlock], c: &Rational) -> bool {
    blocks.iter().all(|b| b.sum.abs() <= c * &b.bound.lo)
}

#[derive(Clone, Debug)]
pub struct SpacingSuite {
    pub reports: Vec<SpacingReport>,
    pub violations: Vec<Violation>,
    pub pairs_checked: usize,
    /// Largest `count / bound_value` seen.
    pub max_count_ratio: f64,
}

impl SpacingSuite {
    pub fn max_cluster(&self) -> usize {
        self.reports
            .iter()
            .filter_map(|r| r.max_cluster)
            .max()
            .unwrap_or(0)
    }

    pub fn clustering_holds(&self, l: u32) -> bool {
        self.max_cluster() <= 2 * l as usize
    }

    /// `count <= count_c * bound_value` for every report, exactly.
    pub fn count_holds(&self, count_c: &Rational) -> bool {
        self.reports.iter().all(|r| {
            let b = r
                .bound_value
                .as_ref()
                .expect("filled by spacing_bound_report");
            int(r.count as u64) <= count_c * &b.lo
        })
    }
}

/// All reports and vanishing checks for `(x, D)` with `D` on the dyadic grid.
pub fn spacing_suite(xs: &[u64], r: u32, l: u32, c: &SpacingConstants) -> Result<SpacingSuite> {
    let mut jobs = Vec::new();
    for &x in xs {
        for d in dyadic_grid(x, r, l, &c.range_c)? {
            jobs.push((x, d));
        }
    }
    let results: Vec<(SpacingReport, usize, Vec<Violation>)> = jobs
        .par_iter()
        .map(|&(x, d)| {
            let rep = spacing_bound_report(x, r, l, d, &c.gap_c)?;
            let (checked, bad) = vanishing_violations(x, r, l, d, &c.gap_c)?;
            Ok((rep, checked, bad))
        })
        .collect::<Result<_>>()?;
    let mut suite = SpacingSuite {
        reports: Vec::with_capacity(results.len()),
        violations: Vec::new(),
        pairs_checked: 0,
        max_count_ratio: 0.0,
    };
    for (rep, checked, bad) in results {
        let b = to_f64(&rep.bound_value.as_ref().expect("filled").lo);
        suite.max_count_ratio = suite.max_count_ratio.max(rep.count as f64 / b);
        suite.pairs_checked += checked;
        suite.violations.extend(bad);
        suite.reports.push(rep);
    }
    Ok(suite)
}

/// `true` when every value is zero, which a fit cannot use.
pub fn all_zero(values: &[(u64, Rational)]) -> bool {
    values.iter().all(|(_, v)| v.is_zero())
}
