//! Nested commutators of `A`, `B` and an observable `O`, and the
//! commutator coefficients that bound the local observable error:
//!
//! * `β = max ‖ad_{H_k}^{q_k} ⋯ ad_{H_1}^{q_1} O‖` over `Σq = p + 1`,
//! * `α = Σ multinomial(p+1; q) ‖ad_{H_l}^{q_l} ⋯ ad_{H_1}^{q_1} O‖` with
//!   `H_j` the generators of the plan's stages,
//! * `α̃ = ‖ad_H^{p+1} O‖`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{commutator, spectral_norm, ComplexMatrix};
use crate::splitting::{Generator, StagePlan};

/// Adjoint actions applied to `O`, innermost first: `(B, A)` is `[A, [B, O]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CommWord(pub Vec<Generator>);

impl CommWord {
    pub fn new(letters: Vec<Generator>) -> Self {
        Self(letters)
    }

    pub fn letters(&self) -> &[Generator] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Runs of equal letters as `(letter, multiplicity)`, innermost first.
    pub fn collapse(&self) -> Vec<(Generator, usize)> {
        let mut out: Vec<(Generator, usize)> = Vec::new();
        for &g in &self.0 {
            match out.last_mut() {
                Some((last, q)) if *last == g => *q += 1,
                _ => out.push((g, 1)),
            }
        }
        out
    }

    pub fn to_expr(&self) -> CommExpr {
        self.0.iter().fold(CommExpr::Leaf(Letter::O), |inner, &g| {
            CommExpr::bracket(CommExpr::Leaf(g.into()), inner)
        })
    }
}

impl fmt::Display for CommWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    A,
    B,
    O,
}

impl From<Generator> for Letter {
    fn from(g: Generator) -> Self {
        match g {
            Generator::A => Letter::A,
            Generator::B => Letter::B,
        }
    }
}

/// Arbitrary bracket expression over `A`, `B`, `O`, e.g. `[A,[[A,B],O]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CommExpr {
    Leaf(Letter),
    Bracket(Box<CommExpr>, Box<CommExpr>),
}

impl CommExpr {
    pub fn bracket(l: CommExpr, r: CommExpr) -> Self {
        CommExpr::Bracket(Box::new(l), Box::new(r))
    }

    /// Number of brackets.
    pub fn depth(&self) -> usize {
        match self {
            CommExpr::Leaf(_) => 0,
            CommExpr::Bracket(l, r) => 1 + l.depth() + r.depth(),
        }
    }

    pub fn eval(
        &self,
        a: &ComplexMatrix,
        b: &ComplexMatrix,
        o: &ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        match self {
            CommExpr::Leaf(Letter::A) => Ok(a.clone()),
            CommExpr::Leaf(Letter::B) => Ok(b.clone()),
            CommExpr::Leaf(Letter::O) => Ok(o.clone()),
            CommExpr::Bracket(l, r) => commutator(&l.eval(a, b, o)?, &r.eval(a, b, o)?),
        }
    }
}

impl fmt::Display for CommExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommExpr::Leaf(Letter::A) => f.write_str("A"),
            CommExpr::Leaf(Letter::B) => f.write_str("B"),
            CommExpr::Leaf(Letter::O) => f.write_str("O"),
            CommExpr::Bracket(l, r) => write!(f, "[{l},{r}]"),
        }
    }
}

impl FromStr for CommExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let e = parse_comm(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Config(format!("trailing input in commutator `{s}`")));
        }
        Ok(e)
    }
}

fn parse_comm(c: &[char], pos: &mut usize) -> Result<CommExpr> {
    let bad = |what: &str, at: usize| {
        Error::Config(format!("malformed commutator: {what} at position {at}"))
    };
    match c.get(*pos) {
        Some('A') => {
            *pos += 1;
            Ok(CommExpr::Leaf(Letter::A))
        }
        Some('B') => {
            *pos += 1;
            Ok(CommExpr::Leaf(Letter::B))
        }
        Some('O') => {
            *pos += 1;
            Ok(CommExpr::Leaf(Letter::O))
        }
        Some('[') => {
            *pos += 1;
            let l = parse_comm(c, pos)?;
            if c.get(*pos) != Some(&',') {
                return Err(bad("expected `,`", *pos));
            }
            *pos += 1;
            let r = parse_comm(c, pos)?;
            if c.get(*pos) != Some(&']') {
                return Err(bad("expected `]`", *pos));
            }
            *pos += 1;
            Ok(CommExpr::bracket(l, r))
        }
        _ => Err(bad("expected A, B, O or `[`", *pos)),
    }
}

/// `ad_{w_k} ⋯ ad_{w_1} O` for the word `w`.
pub fn nested_comm(
    word: &CommWord,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    o: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let mut cur = o.clone();
    for &g in word.letters() {
        let x = match g {
            Generator::A => a,
            Generator::B => b,
        };
        cur = commutator(x, &cur)?;
    }
    Ok(cur)
}

/// Memoized ad-chains sharing inner prefixes.
struct AdChains<'a> {
    a: &'a ComplexMatrix,
    b: &'a ComplexMatrix,
    o: &'a ComplexMatrix,
    matrices: HashMap<Vec<Generator>, ComplexMatrix>,
    norms: HashMap<Vec<Generator>, f64>,
}

impl<'a> AdChains<'a> {
    fn new(a: &'a ComplexMatrix, b: &'a ComplexMatrix, o: &'a ComplexMatrix) -> Result<Self> {
        if !(a.is_square() && a.shape() == b.shape() && a.shape() == o.shape()) {
            return Err(Error::DimensionMismatch {
                op: "commutator coefficients",
                left: a.shape(),
                right: o.shape(),
            });
        }
        Ok(Self {
            a,
            b,
            o,
            matrices: HashMap::new(),
            norms: HashMap::new(),
        })
    }

    fn matrix(&mut self, word: &[Generator]) -> Result<ComplexMatrix> {
        if word.is_empty() {
            return Ok(self.o.clone());
        }
        if let Some(m) = self.matrices.get(word) {
            return Ok(m.clone());
        }
        let (last, inner) = word.split_last().expect("nonempty");
        let inner_m = self.matrix(inner)?;
        let x = match last {
            Generator::A => self.a,
            Generator::B => self.b,
        };
        let m = if inner_m.is_zero() {
            inner_m
        } else {
            commutator(x, &inner_m)?
        };
        self.matrices.insert(word.to_vec(), m.clone());
        Ok(m)
    }

    fn norm(&mut self, word: &[Generator]) -> Result<f64> {
        if let Some(&v) = self.norms.get(word) {
            return Ok(v);
        }
        let v = spectral_norm(&self.matrix(word)?)?;
        self.norms.insert(word.to_vec(), v);
        Ok(v)
    }
}

/// Every word in `{A, B}^len`, grouped by collapsed block structure.
pub fn all_words(len: usize) -> Vec<CommWord> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for bits in 0..(1usize << len) {
        let w = CommWord(
            (0..len)
                .map(|i| {
                    if bits >> i & 1 == 0 {
                        Generator::A
                    } else {
                        Generator::B
                    }
                })
                .collect(),
        );
        if seen.insert(w.collapse()) {
            out.push(w);
        }
    }
    out
}

pub fn compute_beta_comm(
    p: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    o: &ComplexMatrix,
) -> Result<f64> {
    Ok(beta_comm_argmax(p, a, b, o)?.1)
}

/// β together with a word attaining it.
pub fn beta_comm_argmax(
    p: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    o: &ComplexMatrix,
) -> Result<(CommWord, f64)> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "commutator coefficients need p ≥ 1".into(),
        ));
    }
    let mut chains = AdChains::new(a, b, o)?;
    let mut best = (CommWord::default(), 0.0);
    for w in all_words(p + 1) {
        let v = chains.norm(w.letters())?;
        if v > best.1 || best.0.is_empty() {
            best = (w, v);
        }
    }
    Ok(best)
}

type Chain = Vec<(Generator, u32)>;

/// Total weight `Σ Π 1/q_j!` of the compositions of `p + 1` over the stage
/// generators `gens` (innermost first) that collapse to each chain.
fn chain_weights(p: usize, gens: &[Generator]) -> BTreeMap<Chain, f64> {
    let total = (p + 1) as u32;
    let mut states: BTreeMap<Chain, f64> = BTreeMap::new();
    states.insert(Vec::new(), 1.0);
    let mut fact = vec![1.0f64; p + 2];
    for i in 1..fact.len() {
        fact[i] = fact[i - 1] * i as f64;
    }
    for &g in gens {
        let mut next: BTreeMap<Chain, f64> = BTreeMap::new();
        for (chain, w) in &states {
            let used: u32 = chain.iter().map(|(_, q)| q).sum();
            *next.entry(chain.clone()).or_insert(0.0) += w;
            for q in 1..=total - used {
                let mut c = chain.clone();
                match c.last_mut() {
                    Some((last, e)) if *last == g => *e += q,
                    _ => c.push((g, q)),
                }
                *next.entry(c).or_insert(0.0) += w / fact[q as usize];
            }
        }
        states = next;
    }
    states
        .into_iter()
        .filter(|(c, _)| c.iter().map(|(_, q)| q).sum::<u32>() == total)
        .map(|(c, w)| (c, w * fact[p + 1]))
        .collect()
}

fn expand(chain: &Chain) -> Vec<Generator> {
    chain
        .iter()
        .flat_map(|&(g, q)| std::iter::repeat_n(g, q as usize))
        .collect()
}

/// α for the plan's generator sequence. Both readings of the stage order
/// (first stage innermost, or last stage innermost) are evaluated and the
/// larger value returned; they coincide for symmetric plans.
pub fn compute_alpha_comm(
    p: usize,
    plan: &StagePlan,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    o: &ComplexMatrix,
) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "commutator coefficients need p ≥ 1".into(),
        ));
    }
    let mut chains = AdChains::new(a, b, o)?;
    let forward = plan.generators();
    let reversed: Vec<Generator> = forward.iter().rev().copied().collect();
    let mut best: f64 = 0.0;
    for gens in [forward, reversed] {
        let mut sum = 0.0;
        for (chain, w) in chain_weights(p, &gens) {
            sum += w * chains.norm(&expand(&chain))?;
        }
        best = best.max(sum);
    }
    Ok(best)
}

/// `‖ad_H^{p+1} O‖`.
pub fn compute_alpha_tilde(p: usize, h: &ComplexMatrix, o: &ComplexMatrix) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "commutator coefficients need p ≥ 1".into(),
        ));
    }
    let mut cur = o.clone();
    for _ in 0..=p {
        cur = commutator(h, &cur)?;
    }
    spectral_norm(&cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::splitting::suzuki_plan;
    use Generator::{A, B};

    fn m(rows: &[Vec<f64>]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn word_semantics() {
        let w = CommWord::new(vec![B, A]);
        assert_eq!(w.to_string(), "[A,[B,O]]");
        assert_eq!(w.collapse(), vec![(B, 1), (A, 1)]);
        let a = m(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = m(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let o = m(&[vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(nested_comm(&CommWord::default(), &a, &b, &o).unwrap(), o);
        assert!(nested_comm(&CommWord::new(vec![B]), &a, &b, &o)
            .unwrap()
            .is_zero());
        assert!(!nested_comm(&CommWord::new(vec![A]), &a, &b, &o)
            .unwrap()
            .is_zero());
        let via_expr = w.to_expr().eval(&a, &b, &o).unwrap();
        assert_eq!(via_expr, nested_comm(&w, &a, &b, &o).unwrap());
    }

    #[test]
    fn bracket_expressions_parse() {
        for s in ["[A,B]", "[[A,B],O]", "[A,[[A,B],O]]", "[A,[A,[[A,B],O]]]"] {
            let e: CommExpr = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert_eq!("[ A , B ]".parse::<CommExpr>().unwrap().depth(), 1);
        for bad in ["", "[A,B", "[A B]", "C", "[A,B]]"] {
            assert!(bad.parse::<CommExpr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn word_enumeration() {
        assert_eq!(all_words(2).len(), 4);
        assert_eq!(all_words(3).len(), 8);
    }

    #[test]
    fn commuting_inputs_give_zero() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 2.0, 3.0]);
        let b = ComplexMatrix::from_real_diag(&[0.0, -1.0, 5.0]);
        let o = ComplexMatrix::from_real_diag(&[4.0, 4.5, 1.0]);
        assert_eq!(compute_beta_comm(1, &a, &b, &o).unwrap(), 0.0);
        let plan = suzuki_plan(2).unwrap();
        assert_eq!(compute_alpha_comm(2, &plan, &a, &b, &o).unwrap(), 0.0);
        assert_eq!(compute_alpha_tilde(1, &(&a + &b), &o).unwrap(), 0.0);
    }

    #[test]
    fn alpha_tilde_two_by_two() {
        // [H, X] = [[0,-1],[1,0]] and [H, [H, X]] = X for H = diag(1, 2).
        let h = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let x = m(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((compute_alpha_tilde(1, &h, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lie_trotter_alpha_matches_hand_sum() {
        // O commutes with B, so only the first-stage-innermost reading is nonzero
        // beyond the ad_A^2 term.
        let a = m(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let b = ComplexMatrix::from_real_diag(&[1.0, -1.0, 2.0]);
        let o = ComplexMatrix::from_real_diag(&[0.5, 1.0, -1.0]);
        let plan = suzuki_plan(1).unwrap();
        let n = |w: Vec<Generator>| {
            spectral_norm(&nested_comm(&CommWord::new(w), &a, &b, &o).unwrap()).unwrap()
        };
        let want = n(vec![A, A]) + 2.0 * n(vec![A, B]) + n(vec![B, B]);
        let got = compute_alpha_comm(1, &plan, &a, &b, &o).unwrap();
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        let beta = compute_beta_comm(1, &a, &b, &o).unwrap();
        assert!(got >= beta);
    }

    #[test]
    fn chain_weights_count_compositions() {
        // Σ over compositions of multinomials is l^{p+1} for l stages, since
        // each chain weight is a sum of multinomials.
        let plan = suzuki_plan(2).unwrap();
        let total: f64 = chain_weights(2, &plan.generators()).values().sum();
        assert!((total - 27.0).abs() < 1e-12);
        let plan = suzuki_plan(4).unwrap();
        let total: f64 = chain_weights(4, &plan.generators()).values().sum();
        assert!((total - 11f64.powi(5)).abs() < 1e-6);
    }

    #[test]
    fn alpha_tilde_bounded_by_beta() {
        let a = m(&[
            vec![1.0, 2.0, 0.0],
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, -1.0],
        ]);
        let b = ComplexMatrix::from_real_diag(&[0.3, -0.7, 1.1]);
        let o = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        for p in 1..=4 {
            let beta = compute_beta_comm(p, &a, &b, &o).unwrap();
            let tilde = compute_alpha_tilde(p, &(&a + &b), &o).unwrap();
            assert!(tilde <= 2f64.powi(p as i32 + 1) * beta * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let a = ComplexMatrix::identity(2);
        assert!(compute_beta_comm(0, &a, &a, &a).is_err());
        assert!(compute_beta_comm(1, &a, &a, &ComplexMatrix::identity(3)).is_err());
    }
}
