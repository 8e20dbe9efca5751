//! Double-double (~32 digit) versions of the propagators used by the
//! time-step sweeps.
//!
//! High-order schemes at small `dt` have errors near `1e-14`, below what
//! double precision resolves once rounding from hundreds of stage products
//! accumulates. Everything here is carried in double-double and only the
//! final difference of two operators is rounded back to `f64`.
//!
//! Only the structure the sweeps need is supported: a real symmetric
//! circulant `A` and a real diagonal `B`.

use std::ops::{Add, Mul, Neg, Sub};

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::linalg::{Circulant, ComplexMatrix, C64};
use crate::splitting::{Generator, MAX_ORDER};

type Dd = TwoFloat;

fn dd(v: f64) -> Dd {
    Dd::from(v)
}

/// `a / b` by two correction steps of long division. Division by a
/// double-double in `twofloat` forms its residual without a fused
/// multiply-add and is only accurate to about 1e-17.
pub fn dd_div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::new_add(q1, q2) + q3
}

/// `(sin x, cos x)` to full double-double accuracy for moderate `|x|`.
pub fn dd_sin_cos(x: Dd) -> (Dd, Dd) {
    let k = (x.hi() / std::f64::consts::FRAC_PI_2).round();
    let r = x - twofloat::consts::FRAC_PI_2 * k;
    let r2 = r * r;
    // Taylor series; |r| ≤ π/4 + ε needs terms up to about r^29.
    let (mut s, mut c) = (r, dd(1.0));
    let (mut ts, mut tc) = (r, dd(1.0));
    for j in 1..=16 {
        let j = j as f64;
        ts = -(ts * r2) / ((2.0 * j) * (2.0 * j + 1.0));
        tc = -(tc * r2) / ((2.0 * j - 1.0) * (2.0 * j));
        s += ts;
        c += tc;
    }
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: TwoFloat::from_f64(0.0),
        im: TwoFloat::from_f64(0.0),
    };

    pub fn new(re: Dd, im: Dd) -> Self {
        Self { re, im }
    }

    pub fn from_c64(z: C64) -> Self {
        Self::new(dd(z.re), dd(z.im))
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.re.hi() + self.re.lo(), self.im.hi() + self.im.lo())
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// `e^{iθ}`.
    pub fn cis(theta: Dd) -> Self {
        let (s, c) = dd_sin_cos(theta);
        Self::new(c, s)
    }

    pub fn scale(self, s: Dd) -> Self {
        Self::new(self.re * s, self.im * s)
    }

    fn abs_upper(self) -> f64 {
        self.re.hi().abs() + self.im.hi().abs()
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd::new(-self.re, -self.im)
    }
}

/// Dense square matrix of [`Cdd`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DdMatrix {
    n: usize,
    data: Vec<Cdd>,
}

impl DdMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Cdd::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Cdd::new(dd(1.0), dd(0.0));
        }
        m
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                op: "extended matrix",
                left: m.shape(),
                right: m.shape(),
            });
        }
        Ok(Self {
            n: m.rows(),
            data: m.as_slice().iter().map(|&z| Cdd::from_c64(z)).collect(),
        })
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(
            self.n,
            self.n,
            self.data.iter().map(|z| z.to_c64()).collect(),
        )
        .expect("square buffer")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Cdd {
        self.data[i * self.n + j]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &DdMatrix) -> Self {
        assert_eq!(self.n, other.n, "extended matmul dimension");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Cdd::ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &DdMatrix) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &DdMatrix) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Cdd) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// `diag(d) · M`.
    pub fn scale_rows(&mut self, d: &[Cdd]) {
        let n = self.n;
        for (i, &s) in d.iter().enumerate() {
            for z in &mut self.data[i * n..(i + 1) * n] {
                *z = *z * s;
            }
        }
    }

    pub fn pow(&self, mut k: usize) -> Self {
        let mut result: Option<DdMatrix> = None;
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.matmul(&base),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base);
            }
        }
        result.unwrap_or_else(|| Self::identity(self.n))
    }

    /// `M^† O M`.
    pub fn conjugate(&self, o: &DdMatrix) -> Self {
        self.adjoint().matmul(&o.matmul(self))
    }

    /// Max absolute column sum, an upper bound on the 2-norm.
    fn one_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| self.data[i * n + j].abs_upper())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// `u_k = 1/(4 − 4^{1/(2k−1)})` in double-double.
pub fn suzuki_coefficient_dd(k: usize) -> Dd {
    let m = (2 * k - 1) as i32;
    // Newton on y^m = 4 from the double-precision root.
    let mut y = dd(4f64.powf(1.0 / m as f64));
    for _ in 0..3 {
        let ym1 = y.powi(m - 1);
        y -= dd_div(ym1 * y - 4.0, ym1 * m as f64);
    }
    dd_div(dd(1.0), dd(4.0) - y)
}

/// Suzuki plan with double-double coefficients; same stage structure as
/// [`crate::splitting::suzuki_plan`].
pub fn suzuki_plan_dd(p: usize) -> Result<Vec<(Dd, Generator)>> {
    if p == 1 {
        return Ok(vec![(dd(1.0), Generator::A), (dd(1.0), Generator::B)]);
    }
    if p == 0 || p % 2 == 1 || p > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Suzuki order must be 1 or even in 2..={MAX_ORDER}, got {p}"
        )));
    }
    let mut stages = vec![
        (dd(0.5), Generator::A),
        (dd(1.0), Generator::B),
        (dd(0.5), Generator::A),
    ];
    for k in 2..=p / 2 {
        let u = suzuki_coefficient_dd(k);
        let mid = dd(1.0) - u * 4.0;
        let mut next: Vec<(Dd, Generator)> = Vec::with_capacity(5 * stages.len());
        for s in [u, u, mid, u, u] {
            for &(c, g) in &stages {
                match next.last_mut() {
                    Some((acc, last)) if *last == g => *acc += c * s,
                    _ => next.push((c * s, g)),
                }
            }
        }
        stages = next;
    }
    Ok(stages)
}

/// Split propagator in double-double for a circulant `A` and diagonal `B`.
#[derive(Debug, Clone)]
pub struct DdSplitting {
    n: usize,
    a_row: Vec<f64>,
    /// Eigenvalues of `A` on the Fourier modes `ω^{jm}`.
    a_symbol: Vec<Dd>,
    b_diag: Vec<Dd>,
    /// `cos(2πk/n)`, `sin(2πk/n)` for `k < n`.
    cos_tab: Vec<Dd>,
    sin_tab: Vec<Dd>,
}

impl DdSplitting {
    pub fn new(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        let unsupported =
            |what: &str| Error::InvalidParameter(format!("extended precision needs {what}"));
        if a.shape() != b.shape() || !a.is_square() {
            return Err(Error::DimensionMismatch {
                op: "extended splitting",
                left: a.shape(),
                right: b.shape(),
            });
        }
        if !b.is_diagonal() || b.diagonal().iter().any(|z| z.im != 0.0) {
            return Err(unsupported("a real diagonal B"));
        }
        let c = Circulant::from_matrix(a).ok_or_else(|| unsupported("a circulant A"))?;
        let row = c.first_row();
        let n = row.len();
        if row.iter().any(|z| z.im != 0.0) || (1..n).any(|j| row[j] != row[n - j]) {
            return Err(unsupported("a real symmetric A"));
        }
        let (cos_tab, sin_tab): (Vec<Dd>, Vec<Dd>) = (0..n)
            .map(|k| {
                let theta = twofloat::consts::TAU * dd(k as f64) / n as f64;
                let (s, c) = dd_sin_cos(theta);
                (c, s)
            })
            .unzip();
        // The sine part cancels for a symmetric row.
        let a_symbol = (0..n)
            .map(|m| {
                let mut acc = dd(0.0);
                for (l, z) in row.iter().enumerate() {
                    if z.re != 0.0 {
                        acc += cos_tab[(l * m) % n] * z.re;
                    }
                }
                acc
            })
            .collect();
        Ok(Self {
            n,
            a_row: row.iter().map(|z| z.re).collect(),
            a_symbol,
            b_diag: b.diagonal().iter().map(|z| dd(z.re)).collect(),
            cos_tab,
            sin_tab,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `ω^{±k}`.
    fn twiddle(&self, k: usize, inverse: bool) -> Cdd {
        let s = self.sin_tab[k % self.n];
        Cdd::new(self.cos_tab[k % self.n], if inverse { s } else { -s })
    }

    /// Unnormalized DFT with kernel `ω^{∓jm}`.
    fn dft(&self, x: &mut [Cdd], scratch: &mut Vec<Cdd>, inverse: bool) {
        let n = self.n;
        if !n.is_power_of_two() {
            scratch.clear();
            scratch.extend((0..n).map(|m| {
                x.iter().enumerate().fold(Cdd::ZERO, |acc, (j, &v)| {
                    acc + v * self.twiddle(j * m, inverse)
                })
            }));
            x.copy_from_slice(scratch);
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let r = i.reverse_bits() >> (usize::BITS - bits);
            if i < r {
                x.swap(i, r);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let w = self.twiddle(k * stride, inverse);
                    let u = x[start + k];
                    let v = x[start + k + len / 2] * w;
                    x[start + k] = u + v;
                    x[start + k + len / 2] = u - v;
                }
            }
            len <<= 1;
        }
    }

    /// `U ← e^{−iτA} U`.
    fn apply_a(&self, tau: Dd, u: &mut DdMatrix) {
        let n = self.n;
        let inv_n = dd(1.0) / n as f64;
        let phases: Vec<Cdd> = self
            .a_symbol
            .iter()
            .map(|&l| Cdd::cis(-(tau * l)).scale(inv_n))
            .collect();
        let mut col = vec![Cdd::ZERO; n];
        let mut scratch = Vec::with_capacity(n);
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = u.data[i * n + j];
            }
            self.dft(&mut col, &mut scratch, false);
            for (c, &ph) in col.iter_mut().zip(&phases) {
                *c = *c * ph;
            }
            self.dft(&mut col, &mut scratch, true);
            for (i, &c) in col.iter().enumerate() {
                u.data[i * n + j] = c;
            }
        }
    }

    fn b_phases(&self, tau: Dd) -> Vec<Cdd> {
        self.b_diag.iter().map(|&v| Cdd::cis(-(tau * v))).collect()
    }

    /// One step of the plan: stage 1 acts first.
    pub fn step(&self, plan: &[(Dd, Generator)], dt: f64) -> DdMatrix {
        let mut u = DdMatrix::identity(self.n);
        for &(c, g) in plan {
            let tau = c * dt;
            match g {
                Generator::A => self.apply_a(tau, &mut u),
                Generator::B => u.scale_rows(&self.b_phases(tau)),
            }
        }
        u
    }

    /// `A + B`, summed without rounding to double.
    pub fn hamiltonian(&self) -> DdMatrix {
        let n = self.n;
        let mut h = DdMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                h.data[i * n + j] = Cdd::new(dd(self.a_row[(j + n - i) % n]), dd(0.0));
            }
            let k = i * n + i;
            h.data[k] = h.data[k] + Cdd::new(self.b_diag[i], dd(0.0));
        }
        h
    }
}

/// `e^{−iMt}` by Taylor series with scaling and squaring.
pub fn exact_unitary_dd(m: &DdMatrix, t: f64) -> DdMatrix {
    let n = m.n();
    let norm = m.one_norm() * t.abs();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scale = t / 2f64.powi(squarings as i32);
    let x = m.scale(Cdd::new(dd(0.0), dd(-scale)));
    let x_norm = norm / 2f64.powi(squarings as i32);
    let mut sum = DdMatrix::identity(n);
    let mut term = DdMatrix::identity(n);
    let mut bound = 1.0;
    for k in 1..200 {
        term = term.matmul(&x).scale(Cdd::new(dd(1.0) / k as f64, dd(0.0)));
        sum = sum.add(&term);
        bound *= x_norm / k as f64;
        if bound < 1e-34 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Grid;
    use crate::linalg::spectral_norm;
    use crate::model::{build_a, build_b, build_h, ModelParams};
    use crate::splitting::{exact_unitary, suzuki_plan, trotter_step};
    use crate::SchemeKind;

    #[test]
    fn coefficients_refine_double_precision() {
        for k in 2..=4 {
            let u = suzuki_coefficient_dd(k);
            assert!((u.hi() - crate::splitting::suzuki_coefficient(k)).abs() < 1e-15);
            // 4^{1/m} recovered: (4 − 1/u)^m == 4.
            let y = dd(4.0) - dd_div(dd(1.0), u);
            let back = y.powi(2 * k as i32 - 1) - 4.0;
            assert!(back.hi().abs() < 1e-29);
        }
        for p in [1, 2, 4, 6] {
            let a = suzuki_plan_dd(p).unwrap();
            let b = suzuki_plan(p).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.stages()) {
                assert_eq!(x.1, y.gen);
                assert!((x.0.hi() - y.coeff).abs() < 1e-14);
            }
            let sum_a = a
                .iter()
                .filter(|s| s.1 == Generator::A)
                .fold(dd(0.0), |acc, s| acc + s.0);
            assert!((sum_a - 1.0).hi().abs() < 1e-28);
        }
    }

    fn pair(hi: f64, lo: f64) -> Dd {
        Dd::new_add(hi, lo)
    }

    #[test]
    fn elementary_functions_reach_extended_precision() {
        let cases = [
            (
                1.0,
                pair(0.8414709848078965, 1.776845092935536e-18),
                pair(0.5403023058681398, -4.760954612604417e-17),
            ),
            (
                -17.3,
                pair(0.9997744310730111, 6.071956797155485e-18),
                pair(0.021238808173646012, 5.095958310502079e-19),
            ),
            (
                0.785,
                pair(0.706825181105366, -1.704974089506839e-17),
                pair(0.7073882691671998, -2.7075314002327102e-17),
            ),
        ];
        for (x, sin, cos) in cases {
            let (s, c) = dd_sin_cos(dd(x));
            assert!(
                (s - sin).hi().abs() < 1e-31,
                "sin {x}: {:e}",
                (s - sin).hi()
            );
            assert!(
                (c - cos).hi().abs() < 3e-31,
                "cos {x}: {:e}",
                (c - cos).hi()
            );
        }
        let u = suzuki_coefficient_dd(3);
        assert!(
            (u - pair(0.37306582773327285, -2.3078943245631426e-17))
                .hi()
                .abs()
                < 1e-31
        );
        let third = dd_div(dd(1.0), dd(3.0));
        assert!((third * 3.0 - 1.0).hi().abs() < 1e-31);
    }

    fn small_model() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let g = Grid::periodic_pi(16).unwrap();
        let p = ModelParams::new(0.125, g, SchemeKind::FiniteDifference).unwrap();
        (
            build_a(&p).unwrap(),
            build_b(&p).unwrap(),
            build_h(&p).unwrap(),
        )
    }

    #[test]
    fn matches_double_precision_propagators() {
        let (a, b, h) = small_model();
        let s = DdSplitting::new(&a, &b).unwrap();
        let hd = s.hamiltonian().to_matrix();
        assert!((&hd - &h).max_abs() < 1e-12 * h.max_abs());
        for p in [1, 2, 4] {
            let dd_step = s.step(&suzuki_plan_dd(p).unwrap(), 0.1).to_matrix();
            let f_step = trotter_step(&suzuki_plan(p).unwrap(), &a, &b, 0.1).unwrap();
            assert!(spectral_norm(&(&dd_step - &f_step)).unwrap() < 1e-12);
        }
        let ue = exact_unitary_dd(&DdMatrix::from_matrix(&h).unwrap(), 0.5).to_matrix();
        let uf = exact_unitary(&h, 0.5).unwrap();
        assert!(spectral_norm(&(&ue - &uf)).unwrap() < 1e-11);
    }

    #[test]
    fn unitarity_to_extended_precision() {
        let (a, b, h) = small_model();
        let s = DdSplitting::new(&a, &b).unwrap();
        let u = s.step(&suzuki_plan_dd(4).unwrap(), 0.25);
        let defect = u.adjoint().matmul(&u).sub(&DdMatrix::identity(16));
        assert!(defect.to_matrix().max_abs() < 1e-25);
        let e = exact_unitary_dd(&DdMatrix::from_matrix(&h).unwrap(), 0.5);
        let defect = e.adjoint().matmul(&e).sub(&DdMatrix::identity(16));
        assert!(defect.to_matrix().max_abs() < 1e-25);
    }

    #[test]
    fn non_power_of_two_grid() {
        let g = Grid::periodic_pi(12).unwrap();
        let p = ModelParams::new(0.25, g, SchemeKind::Spectral).unwrap();
        let (a, b) = (build_a(&p).unwrap(), build_b(&p).unwrap());
        let s = DdSplitting::new(&a, &b).unwrap();
        let dd_step = s.step(&suzuki_plan_dd(2).unwrap(), 0.2).to_matrix();
        let f_step = trotter_step(&suzuki_plan(2).unwrap(), &a, &b, 0.2).unwrap();
        assert!(spectral_norm(&(&dd_step - &f_step)).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_unsupported_structure() {
        let (a, b, _) = small_model();
        assert!(DdSplitting::new(&b, &b).is_err());
        assert!(DdSplitting::new(&a, &a).is_err());
        assert!(DdSplitting::new(&a, &ComplexMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn powers_and_conjugation() {
        let (_, _, h) = small_model();
        let u = exact_unitary_dd(&DdMatrix::from_matrix(&h).unwrap(), 0.125);
        let u5 = u.pow(5);
        let direct = exact_unitary_dd(&DdMatrix::from_matrix(&h).unwrap(), 0.625);
        let gap = u5.sub(&direct).to_matrix().max_abs();
        assert!(gap < 1e-25, "{gap:e}");
        assert_eq!(u.pow(0), DdMatrix::identity(16));
        let o = DdMatrix::from_matrix(&h).unwrap();
        // H commutes with its own propagator.
        assert!(u.conjugate(&o).sub(&o).to_matrix().max_abs() < 1e-24 * h.max_abs());
    }
}
