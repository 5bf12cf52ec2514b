//! Exact floor-function sums over r-th powers: evaluators, decompositions,
//! error sums, the polynomial pairs and spacing machinery behind the
//! small-`n` estimate, and the exponent-pair calculus.

pub mod arith;
pub mod error;
pub mod exact;
pub mod exp_pairs;
pub mod floor_sum;
pub mod lab;
pub mod pade;
pub mod spacing;

pub use arith::{HKind, PowerSupportedFunction};
pub use error::{Error, Result};
pub use exact::{Interval, Rational};
