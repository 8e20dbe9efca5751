//! Suzuki product formulas and Heisenberg-picture evolution.
//!
//! A plan lists `(c_j, H_j)` stages; the one-step propagator is
//! `U = e^{−iΔt c_l H_l} ⋯ e^{−iΔt c_1 H_1}`, so stage 1 acts first.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, matmul, unitary_exp, Circulant, ComplexMatrix, HermitianEigen, C64,
};

/// Largest order [`suzuki_plan`] accepts.
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    A,
    B,
}

impl Generator {
    pub fn other(self) -> Self {
        match self {
            Generator::A => Generator::B,
            Generator::B => Generator::A,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::A => "A",
            Generator::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub coeff: f64,
    pub gen: Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    order: usize,
    stages: Vec<Stage>,
}

impl StagePlan {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn coeff_sum(&self, gen: Generator) -> f64 {
        self.stages
            .iter()
            .filter(|s| s.gen == gen)
            .map(|s| s.coeff)
            .sum()
    }

    pub fn is_palindromic(&self) -> bool {
        self.stages.iter().eq(self.stages.iter().rev())
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.stages.iter().map(|s| s.gen).collect()
    }
}

impl fmt::Display for StagePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} [", self.order)?;
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", s.coeff, s.gen)?;
        }
        f.write_str("]")
    }
}

/// `u_k = 1 / (4 − 4^{1/(2k−1)})`.
pub fn suzuki_coefficient(k: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2 * k - 1) as f64))
}

pub fn suzuki_plan(p: usize) -> Result<StagePlan> {
    if p == 1 {
        return Ok(StagePlan {
            order: 1,
            stages: vec![
                Stage {
                    coeff: 1.0,
                    gen: Generator::A,
                },
                Stage {
                    coeff: 1.0,
                    gen: Generator::B,
                },
            ],
        });
    }
    if p == 0 || p % 2 == 1 || p > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Suzuki order must be 1 or even in 2..={MAX_ORDER}, got {p}"
        )));
    }
    let mut stages = vec![
        Stage {
            coeff: 0.5,
            gen: Generator::A,
        },
        Stage {
            coeff: 1.0,
            gen: Generator::B,
        },
        Stage {
            coeff: 0.5,
            gen: Generator::A,
        },
    ];
    for k in 2..=p / 2 {
        let u = suzuki_coefficient(k);
        let outer: Vec<Stage> = stages
            .iter()
            .map(|s| Stage {
                coeff: s.coeff * u,
                ..*s
            })
            .collect();
        let middle: Vec<Stage> = stages
            .iter()
            .map(|s| Stage {
                coeff: s.coeff * (1.0 - 4.0 * u),
                ..*s
            })
            .collect();
        let mut next = Vec::with_capacity(5 * stages.len());
        for block in [&outer, &outer, &middle, &outer, &outer] {
            for &s in block.iter() {
                match next.last_mut() {
                    Some(Stage { coeff, gen }) if *gen == s.gen => *coeff += s.coeff,
                    _ => next.push(s),
                }
            }
        }
        stages = next;
    }
    Ok(StagePlan { order: p, stages })
}

/// How `e^{−iτM}` is applied for one generator, chosen once per matrix.
#[derive(Debug, Clone)]
pub enum StageExp {
    Diagonal(Vec<f64>),
    Circulant(Circulant),
    Dense(HermitianEigen),
}

impl StageExp {
    pub fn new(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                op: "stage exponential",
                left: m.shape(),
                right: m.shape(),
            });
        }
        let scale = m.max_abs();
        if m.is_diagonal() {
            let d = m.diagonal();
            let deviation = d.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
            if deviation > 1e-10 * scale {
                return Err(Error::NotHermitian { deviation, scale });
            }
            return Ok(StageExp::Diagonal(d.iter().map(|z| z.re).collect()));
        }
        if let Some(c) = Circulant::from_matrix(m) {
            let defect = c.hermitian_defect();
            if defect > 1e-10 {
                return Err(Error::NotHermitian {
                    deviation: defect,
                    scale: 1.0,
                });
            }
            return Ok(StageExp::Circulant(c));
        }
        Ok(StageExp::Dense(hermitian_eig(m)?))
    }

    /// `U <- e^{−iτM} U`.
    pub fn apply_left(&self, tau: f64, u: &mut ComplexMatrix) -> Result<()> {
        match self {
            StageExp::Diagonal(d) => {
                let phases: Vec<C64> = d.iter().map(|&v| C64::from_polar(1.0, -tau * v)).collect();
                u.scale_rows(&phases);
            }
            StageExp::Circulant(c) => {
                c.map_symbol(|l| C64::from_polar(1.0, -tau * l.re))
                    .apply_left(u);
            }
            StageExp::Dense(eig) => {
                let phases: Vec<C64> = eig
                    .values
                    .iter()
                    .map(|&v| C64::from_polar(1.0, -tau * v))
                    .collect();
                let mut w = matmul(&eig.vectors.adjoint(), u)?;
                w.scale_rows(&phases);
                *u = matmul(&eig.vectors, &w)?;
            }
        }
        Ok(())
    }
}

/// Product-formula propagator with the per-generator factorizations cached,
/// for repeated steps with different `dt`.
#[derive(Debug, Clone)]
pub struct Splitting {
    a: StageExp,
    b: StageExp,
    dim: usize,
}

impl Splitting {
    pub fn new(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        if a.shape() != b.shape() || !a.is_square() {
            return Err(Error::DimensionMismatch {
                op: "trotter_step",
                left: a.shape(),
                right: b.shape(),
            });
        }
        Ok(Self {
            a: StageExp::new(a)?,
            b: StageExp::new(b)?,
            dim: a.rows(),
        })
    }

    pub fn step(&self, plan: &StagePlan, dt: f64) -> Result<ComplexMatrix> {
        let mut u = ComplexMatrix::identity(self.dim);
        for s in plan.stages() {
            let exp = match s.gen {
                Generator::A => &self.a,
                Generator::B => &self.b,
            };
            exp.apply_left(s.coeff * dt, &mut u)?;
        }
        Ok(u)
    }
}

/// One step `U_p^{dt}` of the plan.
pub fn trotter_step(
    plan: &StagePlan,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    dt: f64,
) -> Result<ComplexMatrix> {
    Splitting::new(a, b)?.step(plan, dt)
}

/// `e^{−iHt}`.
pub fn exact_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    unitary_exp(h, t)
}

/// `(U^†)^n O U^n`, with `U^n` formed by repeated squaring.
pub fn heisenberg_evolve(u: &ComplexMatrix, o: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    if u.shape() != o.shape() || !u.is_square() {
        return Err(Error::DimensionMismatch {
            op: "heisenberg_evolve",
            left: u.shape(),
            right: o.shape(),
        });
    }
    if n == 0 {
        return Ok(o.clone());
    }
    let un = u.pow(n)?;
    conjugate(&un, o)
}

/// `U^† O U`.
pub fn conjugate(u: &ComplexMatrix, o: &ComplexMatrix) -> Result<ComplexMatrix> {
    matmul(&u.adjoint(), &matmul(o, u)?)
}

/// Smallest `n ≥ 1` with `C t^{p+1} / n^p ≤ eps`.
pub fn compute_steps(t: f64, eps: f64, p: usize, c: f64) -> Result<u64> {
    if !(t > 0.0 && eps > 0.0 && c > 0.0) || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "compute_steps needs t, eps, C > 0 and p ≥ 1 (t={t}, eps={eps}, p={p}, C={c})"
        )));
    }
    let pf = p as i32;
    let budget = c * t.powi(pf + 1);
    let fits = |n: u64| budget / (n as f64).powi(pf) <= eps;
    let mut n = ((budget / eps).powf(1.0 / p as f64).ceil() as u64).max(1);
    while n > 1 && fits(n - 1) {
        n -= 1;
    }
    while !fits(n) {
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Grid;
    use crate::linalg::spectral_norm;
    use crate::model::{build_a, build_b, build_h, ModelParams};
    use crate::SchemeKind;

    #[test]
    fn low_order_plans() {
        let p1 = suzuki_plan(1).unwrap();
        assert_eq!(p1.generators(), vec![Generator::A, Generator::B]);
        let p2 = suzuki_plan(2).unwrap();
        let want = [
            (0.5, Generator::A),
            (1.0, Generator::B),
            (0.5, Generator::A),
        ];
        for (s, (c, g)) in p2.stages().iter().zip(want) {
            assert_eq!((s.coeff, s.gen), (c, g));
        }
        assert!((suzuki_coefficient(2) - 0.4144907717943757).abs() < 1e-15);
    }

    #[test]
    fn plan_structure() {
        for (p, count) in [(2, 3), (4, 11), (6, 51), (8, 251), (10, 1251)] {
            let plan = suzuki_plan(p).unwrap();
            assert_eq!(plan.len(), count, "p={p}");
            assert!(plan.is_palindromic());
            assert!((plan.coeff_sum(Generator::A) - 1.0).abs() < 1e-13);
            assert!((plan.coeff_sum(Generator::B) - 1.0).abs() < 1e-13);
            assert!(plan.stages().windows(2).all(|w| w[0].gen != w[1].gen));
        }
        for bad in [0, 3, 12] {
            assert!(suzuki_plan(bad).is_err());
        }
    }

    #[test]
    fn commuting_generators_split_exactly() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -2.0, 0.5]);
        let b = ComplexMatrix::from_real_diag(&[0.3, 0.1, -4.0]);
        let exact = exact_unitary(&(&a + &b), 0.7).unwrap();
        for p in [1, 2, 4] {
            let u = trotter_step(&suzuki_plan(p).unwrap(), &a, &b, 0.7).unwrap();
            assert!(spectral_norm(&(&u - &exact)).unwrap() < 1e-10);
        }
        let u = trotter_step(&suzuki_plan(2).unwrap(), &a, &b, 0.0).unwrap();
        assert_eq!(u, ComplexMatrix::identity(3));
    }

    #[test]
    fn dense_and_circulant_paths_agree() {
        let g = Grid::periodic_pi(16).unwrap();
        let p = ModelParams::new(0.25, g, SchemeKind::FiniteDifference).unwrap();
        let (a, b) = (build_a(&p).unwrap(), build_b(&p).unwrap());
        assert!(matches!(StageExp::new(&a).unwrap(), StageExp::Circulant(_)));
        // A perturbed A is no longer circulant and goes through the eigensolver.
        let mut a2 = a.clone();
        a2[(0, 0)] += C64::new(1e-3, 0.0);
        assert!(matches!(StageExp::new(&a2).unwrap(), StageExp::Dense(_)));
        let plan = suzuki_plan(4).unwrap();
        let fast = trotter_step(&plan, &a, &b, 0.1).unwrap();
        let mut dense = ComplexMatrix::identity(16);
        for s in plan.stages() {
            let m = if s.gen == Generator::A { &a } else { &b };
            dense = matmul(&unitary_exp(m, s.coeff * 0.1).unwrap(), &dense).unwrap();
        }
        assert!(spectral_norm(&(&fast - &dense)).unwrap() < 1e-12);
        let uu = matmul(&fast.adjoint(), &fast).unwrap();
        assert!(spectral_norm(&(&uu - &ComplexMatrix::identity(16))).unwrap() < 1e-10);
    }

    #[test]
    fn second_order_local_error() {
        let g = Grid::periodic_pi(64).unwrap();
        let p = ModelParams::new(1.0 / 64.0, g, SchemeKind::FiniteDifference).unwrap();
        let (a, b, h) = (
            build_a(&p).unwrap(),
            build_b(&p).unwrap(),
            build_h(&p).unwrap(),
        );
        let plan = suzuki_plan(2).unwrap();
        let err = |dt: f64| {
            let u = trotter_step(&plan, &a, &b, dt).unwrap();
            spectral_norm(&(&u - &exact_unitary(&h, dt).unwrap())).unwrap()
        };
        let ratio = err(1.0 / 16.0) / err(1.0 / 32.0);
        assert!((6.0..10.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn exact_unitary_group_law() {
        let h = ComplexMatrix::from_real_rows(&[
            vec![1.0, 0.5, 0.0],
            vec![0.5, -1.0, 0.2],
            vec![0.0, 0.2, 0.3],
        ])
        .unwrap();
        let e = |t| exact_unitary(&h, t).unwrap();
        assert!((&e(0.0) - &ComplexMatrix::identity(3)).max_abs() < 1e-15);
        let back = matmul(&e(0.4), &e(-0.4)).unwrap();
        assert!(spectral_norm(&(&back - &ComplexMatrix::identity(3))).unwrap() < 1e-10);
        let st = matmul(&e(0.3), &e(0.5)).unwrap();
        assert!(spectral_norm(&(&st - &e(0.8))).unwrap() < 1e-9);
    }

    #[test]
    fn heisenberg_evolution() {
        let h = ComplexMatrix::from_real_rows(&[vec![1.0, 0.5], vec![0.5, -1.0]]).unwrap();
        let u = exact_unitary(&h, 0.3).unwrap();
        let o = ComplexMatrix::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(heisenberg_evolve(&u, &o, 0).unwrap(), o);
        assert!(
            (&heisenberg_evolve(&ComplexMatrix::identity(2), &o, 5).unwrap() - &o).max_abs()
                < 1e-15
        );
        let t = heisenberg_evolve(&u, &o, 7).unwrap();
        assert!((spectral_norm(&t).unwrap() - spectral_norm(&o).unwrap()).abs() < 1e-9);
        let mut step = o.clone();
        for _ in 0..7 {
            step = conjugate(&u, &step).unwrap();
        }
        assert!((&step - &t).max_abs() < 1e-12);
        assert!(heisenberg_evolve(&u, &ComplexMatrix::zeros(3, 3), 1).is_err());
    }

    #[test]
    fn step_counts() {
        assert_eq!(compute_steps(1.0, 1.0, 2, 1.0).unwrap(), 1);
        assert_eq!(compute_steps(2.0, 1e-4, 2, 1.0).unwrap(), 283);
        assert!(compute_steps(0.0, 1.0, 2, 1.0).is_err());
        let mut eps = 1e-8;
        let mut prev = u64::MAX;
        while eps < 1.0 {
            let n = compute_steps(3.0, eps, 4, 2.5).unwrap();
            assert!(n <= prev);
            prev = n;
            eps *= 2.0;
        }
    }
}
