//! Exact symbolic algebra of semiclassical differential operators
//! `Σ c · y_1^{(a_1)} ⋯ y_r^{(a_r)} · h^m · ∂^d` with rational `c`.
//!
//! Coefficient functions are opaque symbols carrying a derivative counter,
//! so cancellations are structural and exact. Products move `∂^d` past a
//! coefficient with the Leibniz rule `∂^d ∘ g = Σ_r C(d, r) g^{(r)} ∂^{d−r}`.
//!
//! Height is the largest `d` present, width the smallest `m`.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::experiments::fit_slope;
use crate::linalg::{spectral_norm, ComplexMatrix};
use crate::splitting::Generator;

pub type Rational = Ratio<i128>;

/// Commutative product of derivative-tagged base functions, kept sorted.
/// The empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CoeffSymbol {
    factors: Vec<(String, u32)>,
}

impl CoeffSymbol {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn function(name: &str) -> Self {
        Self::from_factors(vec![(name.to_string(), 0)])
    }

    pub fn from_factors(mut factors: Vec<(String, u32)>) -> Self {
        factors.sort();
        Self { factors }
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.factors
    }

    fn times(&self, other: &CoeffSymbol) -> CoeffSymbol {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        CoeffSymbol::from_factors(f)
    }

    /// Product rule: one entry per factor, with that factor differentiated.
    fn derivative(&self) -> Vec<CoeffSymbol> {
        (0..self.factors.len())
            .map(|i| {
                let mut f = self.factors.clone();
                f[i].1 += 1;
                CoeffSymbol::from_factors(f)
            })
            .collect()
    }
}

impl fmt::Display for CoeffSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (i, (name, k)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{name}^({k})")?;
        }
        Ok(())
    }
}

/// One monomial `coeff · symbol · h^hpow · ∂^dord`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymTerm {
    pub coeff: Rational,
    pub symbol: CoeffSymbol,
    pub hpow: i32,
    pub dord: u32,
}

impl fmt::Display for SymTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} * {} * h^{} * d^{}",
            self.coeff, self.symbol, self.hpow, self.dord
        )
    }
}

type TermKey = (Reverse<u32>, i32, CoeffSymbol);

/// Width of an operator: the smallest power of `h`, or infinite for 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Width {
    Finite(i32),
    Infinite,
}

impl Width {
    pub fn plus(self, other: Width) -> Width {
        match (self, other) {
            (Width::Finite(a), Width::Finite(b)) => Width::Finite(a + b),
            _ => Width::Infinite,
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Width::Finite(m) => write!(f, "{m}"),
            Width::Infinite => f.write_str("inf"),
        }
    }
}

/// Sum of [`SymTerm`]s with like terms combined and zeros dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymOp {
    terms: BTreeMap<TermKey, Rational>,
}

impl SymOp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: Rational, symbol: CoeffSymbol, hpow: i32, dord: u32) -> Self {
        let mut op = Self::zero();
        op.add_term(coeff, symbol, hpow, dord);
        op
    }

    /// `h ∂²`.
    pub fn a_sym() -> Self {
        Self::term(Rational::from_integer(1), CoeffSymbol::one(), 1, 2)
    }

    /// `h^{−1} V`.
    pub fn b_sym() -> Self {
        Self::term(Rational::from_integer(1), CoeffSymbol::function("V"), -1, 0)
    }

    /// `y h^q ∂^q`.
    pub fn observable(q: u32) -> Self {
        Self::term(
            Rational::from_integer(1),
            CoeffSymbol::function("y"),
            q as i32,
            q,
        )
    }

    pub fn generator(g: Generator) -> Self {
        match g {
            Generator::A => Self::a_sym(),
            Generator::B => Self::b_sym(),
        }
    }

    fn add_term(&mut self, coeff: Rational, symbol: CoeffSymbol, hpow: i32, dord: u32) {
        if coeff == Rational::from_integer(0) {
            return;
        }
        let key = (Reverse(dord), hpow, symbol);
        let entry = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| Rational::from_integer(0));
        *entry += coeff;
        if *entry == Rational::from_integer(0) {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms sorted by decreasing `d`, then increasing `m`.
    pub fn terms(&self) -> Vec<SymTerm> {
        self.terms
            .iter()
            .map(|((Reverse(d), m, s), c)| SymTerm {
                coeff: *c,
                symbol: s.clone(),
                hpow: *m,
                dord: *d,
            })
            .collect()
    }

    pub fn height(&self) -> u32 {
        self.terms
            .keys()
            .map(|(Reverse(d), _, _)| *d)
            .max()
            .unwrap_or(0)
    }

    pub fn width(&self) -> Width {
        self.terms
            .keys()
            .map(|(_, m, _)| *m)
            .min()
            .map_or(Width::Infinite, Width::Finite)
    }

    pub fn scaled(&self, s: Rational) -> Self {
        let mut out = Self::zero();
        for ((Reverse(d), m, sym), c) in &self.terms {
            out.add_term(c * s, sym.clone(), *m, *d);
        }
        out
    }

    pub fn plus(&self, other: &SymOp) -> Self {
        let mut out = self.clone();
        for ((Reverse(d), m, sym), c) in &other.terms {
            out.add_term(*c, sym.clone(), *m, *d);
        }
        out
    }

    pub fn minus(&self, other: &SymOp) -> Self {
        self.plus(&other.scaled(Rational::from_integer(-1)))
    }

    /// Operator composition `self ∘ other`.
    pub fn compose(&self, other: &SymOp) -> Self {
        let mut out = Self::zero();
        for ((Reverse(d), m, y), c) in &self.terms {
            for ((Reverse(j), k, z), e) in &other.terms {
                // ∂^d ∘ z = Σ_r C(d, r) z^{(r)} ∂^{d−r}
                let mut derivs: BTreeMap<CoeffSymbol, Rational> = BTreeMap::new();
                derivs.insert(z.clone(), Rational::from_integer(1));
                let mut binom: i128 = 1;
                for r in 0..=*d {
                    if r > 0 {
                        binom = binom * (*d - r + 1) as i128 / r as i128;
                        let mut next = BTreeMap::new();
                        for (sym, w) in &derivs {
                            for ds in sym.derivative() {
                                *next.entry(ds).or_insert_with(|| Rational::from_integer(0)) += *w;
                            }
                        }
                        derivs = next;
                    }
                    for (sym, w) in &derivs {
                        let coeff = c * e * w * Rational::from_integer(binom);
                        out.add_term(coeff, y.times(sym), m + k, d - r + j);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for SymOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, t) in self.terms().iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// `[P, Q] = P∘Q − Q∘P`.
pub fn sym_commutator(p: &SymOp, q: &SymOp) -> SymOp {
    p.compose(q).minus(&q.compose(p))
}

pub fn height(p: &SymOp) -> u32 {
    p.height()
}

pub fn width(p: &SymOp) -> Width {
    p.width()
}

/// `[U_n, [U_{n−1}, …, [U_2, U_1]…]]` with `U_i` the symbolic generator of
/// `word[i − 1]`. A one-letter word is the generator itself.
pub fn grade_n_commutator(word: &[Generator]) -> Result<SymOp> {
    let (first, rest) = word
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("grade-n commutator needs n ≥ 1".into()))?;
    Ok(rest.iter().fold(SymOp::generator(*first), |acc, g| {
        sym_commutator(&SymOp::generator(*g), &acc)
    }))
}

/// Outcome of [`verify_height_width`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerifyReport {
    pub trials: usize,
    pub checks: usize,
    pub failures: usize,
    pub first_counterexample: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(describe());
            }
        }
    }
}

const BASE_NAMES: [&str; 3] = ["V", "y", "z"];

fn random_symbol(rng: &mut impl Rng) -> CoeffSymbol {
    let count = rng.gen_range(0..=2);
    CoeffSymbol::from_factors(
        (0..count)
            .map(|_| {
                (
                    BASE_NAMES.choose(rng).expect("nonempty").to_string(),
                    rng.gen_range(0..=2),
                )
            })
            .collect(),
    )
}

/// Random nonzero operator with 1 to 4 terms, `d ≤ 4`, `|m| ≤ 3`.
pub fn random_symop(rng: &mut impl Rng) -> SymOp {
    loop {
        let mut op = SymOp::zero();
        for _ in 0..rng.gen_range(1..=4) {
            let num = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
            let den = rng.gen_range(1..=3);
            op.add_term(
                Rational::new(num, den),
                random_symbol(rng),
                rng.gen_range(-3..=3),
                rng.gen_range(0..=4),
            );
        }
        if !op.is_zero() {
            return op;
        }
    }
}

fn random_word(rng: &mut impl Rng, max_len: usize) -> Vec<Generator> {
    let n = rng.gen_range(1..=max_len);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Generator::A
            } else {
                Generator::B
            }
        })
        .collect()
}

fn word_str(w: &[Generator]) -> String {
    w.iter().map(|g| g.to_string()).collect()
}

/// Checks the height/width calculus on random inputs:
///
/// * for random pairs, `ht([P,Q]) ≤ ht P + ht Q − 1` and
///   `wd([P,Q]) ≥ wd P + wd Q` whenever `[P,Q] ≠ 0`;
/// * for a grade-`n` commutator with `m` letters `A`,
///   `ht ≤ 2m − (n − 1)` and `wd ≥ 2m − n` whenever it is nonzero;
/// * for `W = [C_k, …, [C_1, y h^q ∂^q]]` with grade ≤ 4 layers `C_i`
///   (`k ≤ 3`, `q ≤ 3`), `ht W ≤ wd W`.
///
/// Failures are counted rather than returned as errors.
pub fn verify_height_width(trials: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let p = random_symop(&mut rng);
        let q = random_symop(&mut rng);
        let c = sym_commutator(&p, &q);
        if !c.is_zero() {
            let ht_ok = i64::from(c.height()) < i64::from(p.height()) + i64::from(q.height());
            let wd_ok = c.width() >= p.width().plus(q.width());
            report.record(ht_ok && wd_ok, || {
                format!("pair bound broken\nP =\n{p}\nQ =\n{q}\n[P,Q] =\n{c}")
            });
        }

        let word = random_word(&mut rng, 4);
        let cn = grade_n_commutator(&word).expect("nonempty word");
        if !cn.is_zero() {
            let n = word.len() as i64;
            let m = word.iter().filter(|g| **g == Generator::A).count() as i64;
            let ht_ok = i64::from(cn.height()) <= 2 * m - (n - 1);
            let wd_ok = cn.width() >= Width::Finite((2 * m - n) as i32);
            report.record(ht_ok && wd_ok, || {
                format!("grade-{n} bound broken for word {}:\n{cn}", word_str(&word))
            });
        }

        let layers = rng.gen_range(1..=3);
        let q_ord = rng.gen_range(0..=3);
        let mut w = SymOp::observable(q_ord);
        let mut words = Vec::new();
        for _ in 0..layers {
            let word = random_word(&mut rng, 4);
            w = sym_commutator(&grade_n_commutator(&word).expect("nonempty word"), &w);
            words.push(word_str(&word));
        }
        let ok = Width::Finite(w.height() as i32) <= w.width();
        report.record(ok, || {
            format!("ht > wd for layers {words:?} on O_{q_ord}:\n{w}")
        });
    }
    report
}

/// Least-squares slope of `log ‖P(N)‖₂` against `log N` on `[−π, π)`:
/// the empirical growth exponent of a discrete operator. Returns
/// `−∞` when every norm is zero.
pub fn discrete_height_estimate(
    builder: impl Fn(&Grid) -> Result<ComplexMatrix>,
    ns: &[usize],
) -> Result<f64> {
    if ns.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "discrete height needs at least 3 grid sizes, got {}",
            ns.len()
        )));
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let norm = spectral_norm(&builder(&Grid::periodic_pi(n)?)?)?;
        points.push((n as f64, norm));
    }
    if points.iter().all(|(_, v)| *v == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(fit_slope(&points)?.slope)
}
