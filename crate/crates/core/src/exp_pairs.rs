//! Exponent pairs generated from `(1/2, 1/2)` by the van der Corput
//! processes
//!
//! ```text
//! A(k, l) = (k / (2k + 2), (k + l + 1) / (2k + 2))
//! B(k, l) = (l - 1/2, k + 1/2)
//! ```
//!
//! Words are written with the last-applied process on the left, so `BA2`
//! means apply `A` twice, then `B`. This is the convention under which
//! `BA2`, `BABA2BA2` and `A` evaluate to `(2/7, 4/7)`, `(11/53, 33/53)` and
//! `(1/6, 2/3)`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{half, int, pow_bounds, Interval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Process>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Letters `A`/`B`, each optionally followed by a repeat count: `BA2` = `BAA`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut chars = s.trim().chars().peekable();
        while let Some(c) = chars.next() {
            let p = match c {
                'A' => Process::A,
                'B' => Process::B,
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected {other:?} in word {s:?}; only A, B and repeat counts allowed"
                    )))
                }
            };
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let count = if digits.is_empty() {
                1
            } else {
                digits
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Parse(format!("bad repeat count in {s:?}")))?
            };
            out.extend(std::iter::repeat_n(p, count));
        }
        Ok(Word(out))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        while i < self.0.len() {
            let p = self.0[i];
            let mut j = i;
            while j < self.0.len() && self.0[j] == p {
                j += 1;
            }
            write!(f, "{}", if p == Process::A { 'A' } else { 'B' })?;
            if j - i > 1 {
                write!(f, "{}", j - i)?;
            }
            i = j;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentPair {
    pub k: Rational,
    pub ell: Rational,
    /// Provenance, last-applied process first.
    pub word: Word,
}

impl ExponentPair {
    /// The trivial pair `(1/2, 1/2)`.
    pub fn base() -> Self {
        ExponentPair {
            k: half(),
            ell: half(),
            word: Word::default(),
        }
    }

    pub fn process_a(&self) -> Self {
        let den = int(2) * &self.k + int(2);
        let mut word = self.word.clone();
        word.0.insert(0, Process::A);
        ExponentPair {
            k: &self.k / &den,
            ell: (&self.k + &self.ell + Rational::one()) / den,
            word,
        }
    }

    pub fn process_b(&self) -> Self {
        let mut word = self.word.clone();
        word.0.insert(0, Process::B);
        ExponentPair {
            k: &self.ell - half(),
            ell: &self.k + half(),
            word,
        }
    }

    pub fn apply(&self, p: Process) -> Self {
        match p {
            Process::A => self.process_a(),
            Process::B => self.process_b(),
        }
    }

    /// `0 <= k <= 1/2 <= ell <= 1`.
    pub fn is_valid(&self) -> bool {
        !self.k.is_negative()
            && self.k <= half()
            && half() <= self.ell
            && self.ell <= Rational::one()
    }

    /// `ell / k`, undefined for `k = 0`.
    pub fn ratio(&self) -> Option<Rational> {
        if self.k.is_zero() {
            None
        } else {
            Some(&self.ell / &self.k)
        }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} ell={}", self.k, self.ell)?;
        match self.ratio() {
            Some(q) => write!(f, " ratio={q}"),
            None => write!(f, " ratio=undefined"),
        }
    }
}

/// Applies `word` to `(1/2, 1/2)`, rightmost process first.
pub fn eval_word(word: &Word) -> ExponentPair {
    word.0
        .iter()
        .rev()
        .fold(ExponentPair::base(), |p, &proc| p.apply(proc))
}

pub fn eval_word_str(s: &str) -> Result<ExponentPair> {
    Ok(eval_word(&s.parse()?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub best: ExponentPair,
    /// `|ell/k - r|` of `best`.
    pub distance: Rational,
    pub within_eps: bool,
    /// Distinct pairs evaluated.
    pub examined: usize,
}

/// Searches words of length `<= max_len` for a pair with `ell/k` closest to `r`.
///
/// Words are visited by length and then lexicographically (`A < B`), so the
/// returned word is the shortest, lexicographically first one attaining its
/// distance. The search stops at the first word within `eps`. Only provably
/// redundant words are skipped: those containing `BB` (B is an involution)
/// and those reproducing a pair already seen. Dominance pruning on `(k, ell)`
/// is not applied, because `A` is not monotone in `k` for the second
/// coordinate and could discard the best ratio.
pub fn search_ratio(r: u32, max_len: usize, eps: &Rational) -> Result<SearchResult> {
    if max_len < 1 {
        return Err(Error::InvalidArgument("max_len must be >= 1".into()));
    }
    if eps.is_negative() {
        return Err(Error::InvalidArgument("eps must be >= 0".into()));
    }
    let target = int(r);
    let mut seen: HashSet<(Rational, Rational)> = HashSet::new();
    let mut frontier = vec![ExponentPair::base()];
    seen.insert((half(), half()));
    let mut best: Option<(Rational, ExponentPair)> = None;
    let mut examined = 0usize;

    for len in 0..=max_len {
        if len > 0 {
            let mut candidates = Vec::new();
            for p in &frontier {
                for proc in [Process::A, Process::B] {
                    if proc == Process::B && p.word.0.first() == Some(&Process::B) {
                        continue;
                    }
                    candidates.push(p.apply(proc));
                }
            }
            candidates.sort_by(|a, b| a.word.0.cmp(&b.word.0));
            frontier = candidates
                .into_iter()
                .filter(|q| seen.insert((q.k.clone(), q.ell.clone())))
                .collect();
        }
        for p in &frontier {
            examined += 1;
            let Some(ratio) = p.ratio() else { continue };
            let dist = (ratio - &target).abs();
            let better = best.as_ref().is_none_or(|(d, _)| &dist < d);
            if better {
                best = Some((dist.clone(), p.clone()));
            }
            if &dist <= eps {
                let (distance, best) = best.expect("just set");
                return Ok(SearchResult {
                    best,
                    distance,
                    within_eps: true,
                    examined,
                });
            }
        }
        if frontier.is_empty() {
            break;
        }
    }
    let (distance, best) = best.ok_or_else(|| Error::Verification("no pair with k > 0".into()))?;
    Ok(SearchResult {
        best,
        distance,
        within_eps: false,
        examined,
    })
}

/// Upper-rounded enclosure of `y^(k/(k+1)) N^((ell - r k)/(k+1)) + N^(r+1) / y`.
pub fn gk_bound(p: &ExponentPair, y: &Rational, n: u64, r: u32) -> Result<Interval> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if !y.is_positive() {
        return Err(Error::InvalidArgument("y must be positive".into()));
    }
    let k1 = &p.k + Rational::one();
    let e_y = &p.k / &k1;
    let e_n = (&p.ell - int(r) * &p.k) / &k1;
    let n_q = int(n);
    let first = pow_bounds(y, &e_y, 64)?.mul_nonneg(&pow_bounds(&n_q, &e_n, 64)?);
    let second = num_traits::pow(n_q, r as usize + 1) / y;
    Ok(first.add_scalar(&second))
}

/// `1` for odd `r`, `0` for even `r`.
pub fn eta(r: u32) -> u32 {
    r % 2
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremParameters {
    pub r: u32,
    pub alpha: Rational,
    pub eta: u32,
    pub l_choice: u32,
    /// `A = x^a_exponent`, `l / (r + l)`.
    pub a_exponent: Rational,
    pub error_exponent: Rational,
    /// Admissible `alpha` bound `(r + 2 - eta) / (2r - 2 + 2 eta)` for the general estimate.
    pub alpha_limit: Rational,
    /// Per-`l` bound `(r + 1 - l) / (2l - 1)` of the spacing estimate at `l_choice`.
    pub spacing_alpha_limit: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremExponents {
    /// `2 (1 + alpha) / (3r + eta)`.
    pub thm1: Rational,
    /// `max(psi_term, (1 + alpha) / (2r))` when a pair with `ell = r k` is given.
    pub thm2: Option<Rational>,
    /// `alpha / (r + 1) + k / (k + 1)`.
    pub thm2_psi_term: Option<Rational>,
    /// `(1 + alpha) / (2r)`, for `r >= 2` and `alpha <= 1/(2r - 1)`.
    pub conj: Option<Rational>,
    pub params: TheoremParameters,
}

pub fn theorem_exponents(
    r: u32,
    alpha: &Rational,
    pair: Option<&ExponentPair>,
) -> Result<TheoremExponents> {
    if r < 1 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    if alpha.is_negative() {
        return Err(Error::Range(format!("alpha = {alpha} must be >= 0")));
    }
    let e = eta(r);
    let ri = int(r);
    let ei = int(e);
    let alpha_limit = (&ri + int(2) - &ei) / (int(2) * &ri - int(2) + int(2) * &ei);
    if alpha >= &alpha_limit {
        return Err(Error::Range(format!(
            "alpha = {alpha} must be < (r+2-eta)/(2r-2+2eta) = {alpha_limit}"
        )));
    }
    let l_choice = (r + e) / 2;
    let li = int(l_choice);
    let one = Rational::one();
    let thm1 = int(2) * (&one + alpha) / (int(3) * &ri + &ei);
    let params = TheoremParameters {
        r,
        alpha: alpha.clone(),
        eta: e,
        l_choice,
        a_exponent: &li / (&ri + &li),
        error_exponent: thm1.clone(),
        alpha_limit,
        spacing_alpha_limit: (&ri + &one - &li) / (int(2) * &li - &one),
    };

    let small_alpha = r >= 2 && alpha <= &(&one / (int(2) * &ri - &one));
    let trivial_term = (&one + alpha) / (int(2) * &ri);
    let conj = small_alpha.then(|| trivial_term.clone());

    let (thm2, thm2_psi_term) = match pair {
        None => (None, None),
        Some(p) => {
            if p.ell != &ri * &p.k {
                return Err(Error::Range(format!(
                    "pair ({}, {}) does not satisfy ell = r k for r = {r}",
                    p.k, p.ell
                )));
            }
            if !small_alpha {
                return Err(Error::Range(format!(
                    "alpha = {alpha} must be <= 1/(2r-1) with r >= 2 for the exponent-pair estimate"
                )));
            }
            let psi_term = alpha / (&ri + &one) + &p.k / (&p.k + &one);
            let thm2 = std::cmp::max(psi_term.clone(), trivial_term);
            (Some(thm2), Some(psi_term))
        }
    };
    Ok(TheoremExponents {
        thm1,
        thm2,
        thm2_psi_term,
        conj,
        params,
    })
}
