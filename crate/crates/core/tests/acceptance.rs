//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use floorsum::arith::{HKind, PowerSupportedFunction};
use floorsum::exact::{int, rat, to_f64, Rational};
use floorsum::exp_pairs::{eval_word_str, theorem_exponents, ExponentPair};
use floorsum::floor_sum::{
    brute_sf, conjecture_psi_sum, decompose, e_sharp, fast_sf, sharp_main_term, sharp_sum,
};
use floorsum::lab::experiments::{gk_blocks, gk_holds, psi_fit, spacing_suite, GK_CONSTANT};
use floorsum::lab::{fit_exponent, geometric_grid, sweep, FitOutcome};
use floorsum::pade::construct_pade;
use floorsum::spacing::{calibrate, SpacingConstants};

const SEED: u64 = 0x5eed_f100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_h(rng: &mut ChaCha8Rng) -> HKind {
    match rng.gen_range(0..3) {
        0 => HKind::Const(int(1)),
        a => HKind::Pow(a),
    }
}

fn random_f(rng: &mut ChaCha8Rng, rs: std::ops::RangeInclusive<u32>) -> PowerSupportedFunction {
    let r = rng.gen_range(rs);
    PowerSupportedFunction::new(r, random_h(rng)).expect("r >= 1")
}

/// A rational in `[lo, hi]` with small denominator.
fn random_rational(rng: &mut ChaCha8Rng, lo: u64, hi: u64) -> Rational {
    let q = rng.gen_range(1..=7i64);
    let p = rng.gen_range((lo as i64 * q)..=(hi as i64 * q));
    rat(p, q)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(PowerSupportedFunction, u64)> = (0..500)
        .map(|_| {
            let f = random_f(&mut rng, 1..=4);
            (f, rng.gen_range(1..=1_000_000))
        })
        .collect();
    let bad: Vec<_> = cases
        .par_iter()
        .filter(|(f, x)| fast_sf(f, *x) != brute_sf(f, *x))
        .collect();
    match bad.first() {
        None => outcome(true, "500 random (F, x <= 1e6)"),
        Some((f, x)) => outcome(
            false,
            format!(
                "{} mismatches, first r={} h={} x={x}",
                bad.len(),
                f.r(),
                f.h()
            ),
        ),
    }
}

fn decomposition_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let cases: Vec<_> = (0..200)
        .map(|_| {
            let f = random_f(&mut rng, 1..=4);
            let x = rng.gen_range(1..=1_000_000u64);
            let root = (x as f64).sqrt().floor() as u64;
            let a = random_rational(&mut rng, 1, root.max(1));
            let a = if &a * &a > int(x) { int(root) } else { a };
            let b = loop {
                let b = random_rational(&mut rng, 1, root.max(1));
                if b <= a {
                    break b;
                }
            };
            (f, x, a, b)
        })
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(f, x, a, b)| match decompose(f, *x, a, b) {
            Ok(d) if d.boundary_correction.is_zero() && d.total() == brute_sf(f, *x) => None,
            Ok(d) => Some(format!(
                "x={x} A={a} B={b} correction={}",
                d.boundary_correction
            )),
            Err(e) => Some(format!("x={x} A={a} B={b}: {e}")),
        })
        .collect();
    match failures.first() {
        None => outcome(true, "200 random (F, x, A, B), boundary_correction = 0"),
        Some(m) => outcome(false, format!("{} failures, first {m}", failures.len())),
    }
}

fn main_term_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut failures = 0;
    for _ in 0..100 {
        let f = random_f(&mut rng, 1..=4);
        let x = rng.gen_range(1..=1_000_000u64);
        let a = random_rational(&mut rng, 1, (x as f64).sqrt().floor().max(1.0) as u64);
        let sharp = sharp_sum(&f, x, &a);
        let rebuilt = sharp_main_term(&f, x, &a) + e_sharp(&f, x, &a, 1).unwrap()
            - e_sharp(&f, x, &a, 0).unwrap();
        if sharp != rebuilt {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("100 random instances, {failures} mismatches"),
    )
}

fn pade_suite() -> Outcome {
    let mut problems = Vec::new();
    for r in 2..=8u32 {
        for l in 1..=r {
            let pair = match construct_pade(r, l) {
                Ok(p) => p,
                Err(e) => {
                    problems.push(format!("({r},{l}): {e}"));
                    continue;
                }
            };
            if pair.p.len() != l as usize || pair.q.len() != l as usize {
                problems.push(format!("({r},{l}): degree"));
            }
            if pair.p.iter().chain(&pair.q).any(|c| c.is_zero()) {
                problems.push(format!("({r},{l}): zero coefficient"));
            }
            if !matches!(pair.remainder_order(), Ok(o) if o >= 2 * l as usize - 1) {
                problems.push(format!("({r},{l}): remainder order"));
            }
        }
    }
    let pair = construct_pade(2, 2).expect("(2,2)");
    let (p, q) = (&pair.p, &pair.q);
    // proportional to (2 + x, 2 - 3x)
    let b = |v: i64| BigInt::from(v);
    if &p[0] * b(1) != &p[1] * b(2) || &q[0] * b(-3) != &q[1] * b(2) || p[0] != q[0] {
        problems.push(format!("(2,2) gave {pair}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for _ in 0..1000 {
        let d: i64 = rng.gen_range(1..=1_000_000);
        let a: i64 = rng.gen_range(0..d);
        let (p0, q0) = pair.homogenize_eval(&b(a), &b(d));
        // scaled so that P has leading-constant 2
        let lhs = (p0 * b(d - a).pow(2) - q0 * b(d).pow(2)) * b(2);
        if lhs != b(a).pow(3) * &p[0] {
            problems.push(format!("identity fails at a={a}, d={d}"));
            break;
        }
    }
    match problems.first() {
        None => outcome(
            true,
            format!("2 <= r <= 8, all l; (2,2) = {pair}; 1000 identity checks"),
        ),
        Some(m) => outcome(false, format!("{} problems, first {m}", problems.len())),
    }
}

fn exponent_pairs() -> Outcome {
    let mut problems = Vec::new();
    let expected = [
        ("BA2", rat(2, 7), rat(4, 7), 2),
        ("BABA2BA2", rat(11, 53), rat(33, 53), 3),
        ("A", rat(1, 6), rat(2, 3), 4),
    ];
    let mut pairs: Vec<ExponentPair> = Vec::new();
    for (w, k, ell, r) in expected {
        let p = eval_word_str(w).expect("word parses");
        if p.k != k || p.ell != ell || p.ell != &p.k * int(r) {
            problems.push(format!("{w} gave {p}"));
        }
        pairs.push(p);
    }
    let zero = Rational::zero();
    let t2 = theorem_exponents(2, &zero, Some(&pairs[0]));
    let t3 = theorem_exponents(3, &zero, Some(&pairs[1]));
    let t4 = theorem_exponents(4, &zero, Some(&pairs[2]));
    match (t2, t3, t4) {
        (Ok(t2), Ok(t3), Ok(t4)) => {
            let checks = [
                (t2.thm1, rat(1, 3), "thm1 r=2"),
                (
                    t2.thm2_psi_term.unwrap_or_default(),
                    rat(2, 9),
                    "psi term r=2",
                ),
                (t2.thm2.unwrap_or_default(), rat(1, 4), "thm2 r=2"),
                (t2.conj.unwrap_or_default(), rat(1, 4), "conj r=2"),
                (
                    t3.thm2_psi_term.unwrap_or_default(),
                    rat(11, 64),
                    "psi term r=3",
                ),
                (
                    t4.thm2_psi_term.unwrap_or_default(),
                    rat(1, 7),
                    "psi term r=4",
                ),
            ];
            for (got, want, name) in checks {
                if got != want {
                    problems.push(format!("{name}: {got} != {want}"));
                }
            }
        }
        _ => problems.push("theorem_exponents failed".into()),
    }
    match problems.first() {
        None => outcome(
            true,
            "BA2, BABA2BA2, A; exponents 1/3, 2/9, 1/4, 11/64, 1/7",
        ),
        Some(m) => outcome(false, m.clone()),
    }
}

fn spacing() -> Outcome {
    let c = SpacingConstants::shipped();
    let c_fit = c.count_c.clone();
    let suite = match spacing_suite(&[100_000, 1_000_000, 10_000_000], 2, 2, &c) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let calibration = match calibrate(&[100_000, 1_000_000, 10_000_000], 2, 2, &c.range_c) {
        Ok(cal) => cal,
        Err(e) => return outcome(false, e.to_string()),
    };
    // the shipped window must sit below every violating gap found by the full pair scan
    let margin = calibration.min_violating_ratio.unwrap_or(f64::INFINITY);
    let pass = suite.violations.is_empty()
        && to_f64(&c.gap_c) < margin
        && suite.clustering_holds(2)
        && c_fit <= int(4)
        && suite.count_holds(&c_fit);
    outcome(
        pass,
        format!(
            "{} reports, {} witness pairs with a <= c'''L, {} violations, max cluster {}, C_fit = {} (observed max count/bound {:.3}), c''' = {} (smallest violating a/L over all {} pairs: {margin:.3})",
            suite.reports.len(),
            suite.pairs_checked,
            suite.violations.len(),
            suite.max_cluster(),
            c_fit,
            suite.max_count_ratio,
            c.gap_c,
            calibration.pairs_checked
        ),
    )
}

fn error_exponent() -> Outcome {
    let grid = geometric_grid(10_000, 100_000_000, 40).expect("grid");
    let rows = match sweep(
        &PowerSupportedFunction::one(2),
        &grid,
        &rat(1, 1_000_000_000),
    ) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    match fit_exponent(&rows) {
        Ok(FitOutcome::Fit { result, dropped }) => outcome(
            result.slope <= 0.30 && rows.len() == 40,
            format!(
                "slope {:.4} <= 0.30, r^2 {:.3}, {} points, {dropped} dropped",
                result.slope, result.r_squared, result.n_points
            ),
        ),
        Ok(other) => outcome(false, format!("{other:?}")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn psi_sum() -> Outcome {
    let spot = conjecture_psi_sum(2, 100, 0).expect("spot");
    let grid = geometric_grid(10_000, 100_000_000, 40).expect("grid");
    let limit = 2.0 / 9.0 + 0.08;
    let mut pass = spot == rat(-59, 36);
    let mut detail = format!("x=100 delta=0: {spot}");
    for delta in 0..=1 {
        match psi_fit(2, delta, &grid) {
            Ok((_, FitOutcome::Fit { result, .. })) => {
                pass &= result.slope <= limit;
                detail += &format!(
                    "; delta={delta} slope {:.4} (r^2 {:.3})",
                    result.slope, result.r_squared
                );
            }
            other => {
                pass = false;
                detail += &format!("; delta={delta} {other:?}");
            }
        }
    }
    outcome(pass, format!("{detail}; limit {limit:.4}"))
}

fn gk_sanity() -> Outcome {
    let pair = eval_word_str("BA2").expect("BA2");
    let c = int(GK_CONSTANT);
    let mut pass = c <= int(10);
    let mut detail = format!("C = {GK_CONSTANT}");
    for delta in 0..=1 {
        match gk_blocks(&pair, 100_000_000, 2, delta, 10_000) {
            Ok(blocks) => {
                let worst = blocks.iter().map(|b| b.ratio).fold(0.0, f64::max);
                pass &= gk_holds(&blocks, &c);
                detail += &format!(
                    "; delta={delta}: {} blocks, max ratio {worst:.3}",
                    blocks.len()
                );
            }
            Err(e) => {
                pass = false;
                detail += &format!("; delta={delta}: {e}");
            }
        }
    }
    outcome(pass, detail)
}

fn cf_certification() -> Outcome {
    let eps9 = rat(1, 1_000_000_000);
    let one = PowerSupportedFunction::one(1).compute_cf(&eps9);
    let mut pass = matches!(&one, Ok(i) if i.contains(&int(1)) && i.width() <= eps9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let epss = [
        rat(1, 1000),
        rat(1, 1_000_000),
        eps9.clone(),
        rat(1, 1_000_000_000_000),
    ];
    let mut checked = 0;
    for _ in 0..50 {
        let r = rng.gen_range(2..=4u32);
        let h = match rng.gen_range(0..3) {
            0 => HKind::Const(rat(rng.gen_range(-9..=9i64), rng.gen_range(1..=5i64))),
            1 => HKind::Const(int(1)),
            _ => HKind::Pow(rng.gen_range(0..(2 * r - 1))),
        };
        let f = PowerSupportedFunction::new(r, h).expect("r >= 1");
        let encl: Vec<_> = epss.iter().map(|e| f.compute_cf(e)).collect();
        for (i, e) in encl.iter().enumerate() {
            match e {
                Ok(iv) if iv.width() <= epss[i] => {}
                _ => pass = false,
            }
        }
        let encl: Vec<_> = encl.into_iter().filter_map(|e| e.ok()).collect();
        for a in &encl {
            for b in &encl {
                pass &= a.overlaps(b);
            }
        }
        // a finer enclosure must sit inside the coarser one widened by the finer width
        for w in encl.windows(2) {
            pass &= (&w[1].lo - &w[0].hi).abs() <= w[0].width() + w[1].width();
        }
        checked += 1;
    }
    outcome(
        pass,
        format!("r=1 contains 1; {checked} random F at 4 nested eps"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "oracle equivalence",
            oracle_equivalence,
            Duration::from_secs(120),
        ),
        (
            "decomposition identity",
            decomposition_identity,
            Duration::from_secs(120),
        ),
        (
            "main-term reconstruction",
            main_term_reconstruction,
            Duration::from_secs(120),
        ),
        ("pade suite", pade_suite, Duration::from_secs(30)),
        (
            "exponent-pair reproduction",
            exponent_pairs,
            Duration::from_secs(1),
        ),
        ("spacing suite", spacing, Duration::from_secs(180)),
        (
            "empirical error exponent",
            error_exponent,
            Duration::from_secs(180),
        ),
        ("conjecture psi-sum", psi_sum, Duration::from_secs(120)),
        ("gk bound sanity", gk_sanity, Duration::from_secs(120)),
        (
            "cf certification",
            cf_certification,
            Duration::from_secs(30),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
