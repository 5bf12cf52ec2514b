//! Experiment plumbing: x-sweeps with CSV output, log-log fits, and the
//! spacing, psi-sum and exponent-pair experiments.

pub mod experiments;
pub mod fit;
pub mod sweep;

pub use fit::{fit_exponent, fit_points, FitOutcome, FitResult};
pub use sweep::{read_csv, sweep, sweep_with, write_csv, SweepRow};

use crate::error::{Error, Result};

/// `points` integers spaced geometrically from `x_min` to `x_max`, rounded
/// to the nearest integer, duplicates removed.
pub fn geometric_grid(x_min: u64, x_max: u64, points: usize) -> Result<Vec<u64>> {
    if x_min < 1 || x_max < x_min {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= x_min <= x_max, got {x_min}, {x_max}"
        )));
    }
    match points {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![x_min]),
        _ => {}
    }
    let (lo, hi) = ((x_min as f64).ln(), (x_max as f64).ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            if i == points - 1 {
                x_max
            } else {
                ((lo + step * i as f64).exp().round() as u64).clamp(x_min, x_max)
            }
        })
        .collect();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(10_000, 100_000_000, 40).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 10_000);
        assert_eq!(*g.last().unwrap(), 100_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(geometric_grid(5, 9, 0).unwrap(), Vec::<u64>::new());
        assert_eq!(geometric_grid(1, 3, 10).unwrap(), vec![1, 2, 3]);
        assert!(geometric_grid(9, 5, 3).is_err());
    }
}
