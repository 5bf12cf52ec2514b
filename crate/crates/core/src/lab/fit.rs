//! Ordinary least squares on `(ln x, ln |error|)`. The slope does not depend
//! on the base of the logarithm.

use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::lab::sweep::SweepRow;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitOutcome {
    Fit {
        result: FitResult,
        dropped: usize,
    },
    /// Every error was exactly zero.
    Exact {
        dropped: usize,
    },
}

impl FitOutcome {
    pub fn result(&self) -> Option<&FitResult> {
        match self {
            FitOutcome::Fit { result, .. } => Some(result),
            FitOutcome::Exact { .. } => None,
        }
    }

    pub fn dropped(&self) -> usize {
        match self {
            FitOutcome::Fit { dropped, .. } | FitOutcome::Exact { dropped } => *dropped,
        }
    }
}

/// Least squares of `ln y` on `ln x`; points with `y <= 0` are dropped.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitOutcome> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    let dropped = points.len() - kept.len();
    if kept.is_empty() && !points.is_empty() {
        return Ok(FitOutcome::Exact { dropped });
    }
    if kept.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points with nonzero error, got {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(FitOutcome::Fit {
        result: FitResult {
            slope,
            intercept: my - slope * mx,
            r_squared,
            n_points: kept.len(),
        },
        dropped,
    })
}

/// Fits the midpoints of the error enclosures.
pub fn fit_exponent(rows: &[SweepRow]) -> Result<FitOutcome> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.x as f64, to_f64(&r.abs_err.mid())))
        .collect();
    fit_points(&points)
}
