use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_traits::{Signed, Zero};

use floorsum::arith::{default_cf_eps, HKind, PowerSupportedFunction};
use floorsum::exact::{int, integer_rth_root, parse_rational, to_decimal, Interval, Rational};
use floorsum::exp_pairs::{eval_word_str, search_ratio, theorem_exponents};
use floorsum::floor_sum::{brute_sf, conjecture_psi_sum, decompose, fast_sf};
use floorsum::lab::experiments::psi_fit;
use floorsum::lab::{fit_exponent, geometric_grid, read_csv, sweep_with, write_csv, FitOutcome};
use floorsum::pade::construct_pade;
use floorsum::spacing::{spacing_bound_report, vanishing_violations, SpacingConstants};

#[derive(Parser)]
#[command(
    name = "floorsum",
    version,
    about = "Exact floor-function sums over r-th powers"
)]
struct Cli {
    /// Worker threads for parallel experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct FnArgs {
    #[arg(long, value_parser = parse_u32)]
    r: u32,
    /// `one`, `const:p/q` or `pow:a`.
    #[arg(long, default_value = "one")]
    h: HKind,
    /// Growth exponent of the envelope `|h(d)| <= C d^alpha`.
    #[arg(long, value_parser = parse_rat)]
    alpha: Option<Rational>,
    /// Envelope constant `C`.
    #[arg(long, value_parser = parse_rat)]
    c: Option<Rational>,
}

impl FnArgs {
    fn build(&self) -> Result<PowerSupportedFunction> {
        let f = PowerSupportedFunction::new(self.r, self.h.clone())?;
        Ok(match (&self.alpha, &self.c) {
            (None, None) => f,
            (alpha, c) => {
                let alpha = alpha.clone().unwrap_or_else(|| f.alpha().clone());
                let c = c.clone().unwrap_or_else(|| f.c_growth().clone());
                f.with_envelope(alpha, c)?
            }
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// S_f(x) by the block method.
    Sum {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        /// Also evaluate term by term and compare.
        #[arg(long)]
        brute: bool,
    },
    /// Split S_f(x) into dagger, flat and sharp pieces.
    Decompose {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long, value_parser = parse_rat)]
        a: Rational,
        #[arg(long, value_parser = parse_rat)]
        b: Rational,
    },
    /// Certified enclosure of C_f.
    Cf {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long, value_parser = parse_rat)]
        eps: Option<Rational>,
    },
    /// Integer polynomial pair with P(x)(1-x)^r - Q(x) = O(x^(2l-1)).
    Pade {
        #[arg(long, value_parser = parse_u32)]
        r: u32,
        #[arg(long, value_parser = parse_u32)]
        l: u32,
    },
    /// One CSV row per dyadic D: D,count,bound_value,max_cluster,L_used.
    Spacing {
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long, value_parser = parse_u32)]
        r: u32,
        #[arg(long, value_parser = parse_u32)]
        l: u32,
        #[arg(long, value_parser = parse_u64, default_value = "1")]
        dmin: u64,
        /// Defaults to floor(x^(1/r)).
        #[arg(long, value_parser = parse_u64)]
        dmax: Option<u64>,
        /// Window constant; defaults to the shipped value.
        #[arg(long, value_parser = parse_rat)]
        gap_c: Option<Rational>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a word of A/B processes, or search for a ratio ell/k.
    Exppair {
        #[arg(long, conflicts_with = "search_r")]
        word: Option<String>,
        #[arg(long, value_parser = parse_u32)]
        search_r: Option<u32>,
        #[arg(long, value_parser = parse_usize, default_value = "8")]
        max_len: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Option<Rational>,
        /// Also print theorem exponents for this alpha, with r = ell/k.
        #[arg(long, value_parser = parse_rat)]
        alpha: Option<Rational>,
    },
    /// Sweep x over a geometric grid and write CSV.
    Sweep {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long, value_parser = parse_u64)]
        x_min: u64,
        #[arg(long, value_parser = parse_u64)]
        x_max: u64,
        #[arg(long, value_parser = parse_usize)]
        points: usize,
        #[arg(long, value_parser = parse_rat)]
        eps: Option<Rational>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compute rows on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Fit ln|error| against ln x for a sweep CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// sum_{n <= x^(1/(r+1))} psi(x / (n^r + delta)), at one x or fitted over a grid.
    Psi {
        #[arg(long, value_parser = parse_u32, default_value = "2")]
        r: u32,
        #[arg(long, value_parser = parse_u32, default_value = "0")]
        delta: u32,
        #[arg(long, value_parser = parse_u64, conflicts_with_all = ["x_min", "x_max"])]
        x: Option<u64>,
        #[arg(long, value_parser = parse_u64)]
        x_min: Option<u64>,
        #[arg(long, value_parser = parse_u64)]
        x_max: Option<u64>,
        #[arg(long, value_parser = parse_usize, default_value = "40")]
        points: usize,
    },
}

fn parse_rat(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    let q = parse_rat(s)?;
    if !q.is_integer() || q.is_negative() {
        return Err(format!("{s} is not a nonnegative integer"));
    }
    q.to_integer()
        .try_into()
        .map_err(|_| format!("{s} is too large"))
}

fn parse_u32(s: &str) -> std::result::Result<u32, String> {
    parse_u64(s)?
        .try_into()
        .map_err(|_| format!("{s} is too large"))
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    parse_u64(s)?
        .try_into()
        .map_err(|_| format!("{s} is too large"))
}

fn show(q: &Rational) -> String {
    format!("{q} ({})", to_decimal(q, 12))
}

fn show_interval(i: &Interval) -> String {
    format!(
        "[{}, {}] width {}",
        to_decimal(&i.lo, 15),
        to_decimal(&i.hi, 15),
        to_decimal(&i.width(), 3)
    )
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_fit(outcome: &FitOutcome) {
    match outcome {
        FitOutcome::Fit { result, dropped } => println!(
            "slope={:.6} intercept={:.6} r_squared={:.6} n_points={} dropped={dropped}",
            result.slope, result.intercept, result.r_squared, result.n_points
        ),
        FitOutcome::Exact { dropped } => println!("exact: every error is zero (dropped={dropped})"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Sum { f, x, brute } => {
            let f = f.build()?;
            let s = fast_sf(&f, x);
            println!("S_f({x}) = {}", show(&s));
            if brute {
                let b = brute_sf(&f, x);
                if b != s {
                    bail!("block sum {s} differs from term-by-term sum {b}");
                }
                println!("term-by-term sum agrees");
            }
        }
        Cmd::Decompose { f, x, a, b } => {
            let f = f.build()?;
            let d = decompose(&f, x, &a, &b)?;
            println!("dagger = {}", show(&d.dagger));
            println!("flat = {}", show(&d.flat));
            println!("sharp = {}", show(&d.sharp));
            println!("boundary_correction = {}", d.boundary_correction);
            println!("total = {}", show(&d.total()));
            if !d.boundary_correction.is_zero() {
                bail!("pieces do not add up to S_f({x})");
            }
        }
        Cmd::Cf { f, eps } => {
            let f = f.build()?;
            let eps = eps.unwrap_or_else(default_cf_eps);
            let cf = f.compute_cf(&eps)?;
            println!("C_f in {}", show_interval(&cf));
            if cf.width() > eps {
                bail!("enclosure wider than eps = {eps}");
            }
        }
        Cmd::Pade { r, l } => {
            let pair = construct_pade(r, l)?;
            println!("{pair}");
            println!("remainder_order = {}", pair.remainder_order()?);
            println!("bound_constant = {}", pair.bound_constant());
        }
        Cmd::Spacing {
            x,
            r,
            l,
            dmin,
            dmax,
            gap_c,
            out,
        } => {
            if dmin < 1 {
                bail!("dmin must be >= 1");
            }
            let consts = SpacingConstants::shipped();
            let gap_c = gap_c.unwrap_or_else(|| consts.gap_c.clone());
            let dmax = match dmax {
                Some(d) => d,
                None => integer_rth_root(x, r)?,
            };
            let mut ds = Vec::new();
            let mut d = dmin;
            while d <= dmax {
                ds.push(d);
                d = d.checked_mul(2).context("D overflow")?;
            }
            let mut w = csv::Writer::from_writer(output(&out)?);
            w.write_record(["D", "count", "bound_value", "max_cluster", "L_used"])?;
            let e = 2 * r + 1 - l.min(2 * r);
            let mut problems = Vec::new();
            for d in ds {
                let rep = spacing_bound_report(x, r, l, d, &gap_c)?;
                let bound = rep.bound_value.as_ref().expect("filled");
                let len = rep.l_used.as_ref().expect("filled");
                let cluster = rep.max_cluster.expect("filled");
                w.write_record([
                    d.to_string(),
                    rep.count.to_string(),
                    to_decimal(&bound.hi, 12),
                    cluster.to_string(),
                    to_decimal(&len.lo, 12),
                ])?;
                // the invariants are only claimed for D >= range_c x^(1/(2r+1-l))
                let in_range = l >= 2
                    && int(num_traits::pow(num_bigint::BigInt::from(d), e as usize))
                        >= num_traits::pow(consts.range_c.clone(), e as usize) * int(x);
                if in_range {
                    let (_, bad) = vanishing_violations(x, r, l, d, &gap_c)?;
                    if let Some(v) = bad.first() {
                        problems.push(format!(
                            "D={d}: modified difference {} for d={}, a={}, n1={}, n2={}",
                            v.value, v.d, v.a, v.n1, v.n2
                        ));
                    }
                    if cluster > 2 * l as usize {
                        problems.push(format!("D={d}: cluster of {cluster} exceeds 2l"));
                    }
                    if int(rep.count as u64) > &consts.count_c * &bound.lo {
                        problems.push(format!("D={d}: count {} exceeds C_fit * bound", rep.count));
                    }
                }
            }
            w.flush()?;
            if !problems.is_empty() {
                bail!("invariant violations:\n{}", problems.join("\n"));
            }
        }
        Cmd::Exppair {
            word,
            search_r,
            max_len,
            eps,
            alpha,
        } => {
            let pair = match (word, search_r) {
                (Some(w), _) => eval_word_str(&w)?,
                (None, Some(r)) => {
                    let eps = eps.unwrap_or_else(Rational::zero);
                    let res = search_ratio(r, max_len, &eps)?;
                    println!(
                        "distance={} within_eps={} examined={}",
                        res.distance, res.within_eps, res.examined
                    );
                    res.best
                }
                (None, None) => bail!("give --word or --search-r"),
            };
            println!("word={} {pair}", pair.word);
            if !pair.is_valid() {
                bail!("pair left the region 0 <= k <= 1/2 <= ell <= 1");
            }
            if let Some(alpha) = alpha {
                let ratio = pair.ratio().context("k = 0 has no ratio")?;
                if !ratio.is_integer() {
                    bail!("ell/k = {ratio} is not an integer r");
                }
                let r: u32 = ratio.to_integer().try_into().context("ratio too large")?;
                let t = theorem_exponents(r, &alpha, Some(&pair))?;
                println!("thm1={}", t.thm1);
                if let Some(v) = &t.thm2 {
                    println!("thm2={v}");
                }
                if let Some(v) = &t.conj {
                    println!("conj={v}");
                }
            }
        }
        Cmd::Sweep {
            f,
            x_min,
            x_max,
            points,
            eps,
            out,
            sequential,
        } => {
            let f = f.build()?;
            let grid = geometric_grid(x_min, x_max, points)?;
            let eps = eps.unwrap_or_else(floorsum::lab::sweep::default_sweep_eps);
            let rows = sweep_with(&f, &grid, &eps, !sequential)?;
            write_csv(&rows, output(&out)?)?;
            if out.is_some() {
                println!("rows={}", rows.len());
                if rows.len() >= 2 {
                    print_fit(&fit_exponent(&rows)?);
                }
            }
        }
        Cmd::Fit { input } => {
            let file =
                File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = read_csv(file)?;
            print_fit(&fit_exponent(&rows)?);
        }
        Cmd::Psi {
            r,
            delta,
            x,
            x_min,
            x_max,
            points,
        } => match (x, x_min, x_max) {
            (Some(x), _, _) => println!("{}", show(&conjecture_psi_sum(r, x, delta)?)),
            (None, Some(lo), Some(hi)) => {
                let grid = geometric_grid(lo, hi, points)?;
                let (_, fit) = psi_fit(r, delta, &grid)?;
                print_fit(&fit);
            }
            _ => bail!("give --x, or both --x-min and --x-max"),
        },
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
