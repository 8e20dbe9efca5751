//! Hermitian eigendecomposition: Householder reduction to a real
//! tridiagonal matrix followed by implicit QL with Wilkinson shifts.
//!
//! Real symmetric input (the finite-difference Hamiltonians are) runs the
//! same code over `f64`, roughly four times cheaper than complex arithmetic.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::{matmul, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Inputs whose anti-Hermitian part exceeds this fraction of the largest
/// entry are rejected.
const HERMITIAN_TOL: f64 = 1e-10;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// `M = V diag(values) V^†` with `values` ascending and `V` unitary.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V^†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut vd = self.vectors.clone();
        vd.scale_cols(&d);
        matmul(&vd, &self.vectors.adjoint()).expect("square eigenvector matrix")
    }

    /// `e^{iθM} = V diag(e^{iθλ}) V^†`.
    pub fn exp_i(&self, theta: f64) -> ComplexMatrix {
        self.apply_fn(|l| C64::from_polar(1.0, theta * l))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| C64::new(l, 0.0))
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let (values, vectors) = decompose(m, true)?;
    Ok(HermitianEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(decompose(m, false)?.0)
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() + 1 == diag.len()`), ascending.
pub fn tridiagonal_eig(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal with {n} diagonal entries needs {} off-diagonal entries, got {}",
            n - 1,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn decompose(m: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            op: "hermitian_eig",
            left: m.shape(),
            right: m.shape(),
        });
    }
    let scale = m.max_abs();
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation, scale });
    }
    let n = m.rows();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| ComplexMatrix::zeros(0, 0))));
    }
    let h = m.hermitian_part();
    if h.as_slice().iter().all(|z| z.im == 0.0) {
        let a: Vec<f64> = h.as_slice().iter().map(|z| z.re).collect();
        decompose_generic(a, n, want_vectors)
    } else {
        decompose_generic(h.into_vec(), n, want_vectors)
    }
}

/// Scalar field the reduction runs over.
trait Elem:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn to_c64(self) -> C64;
}

impl Elem for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Elem for C64 {
    const ZERO: Self = ZERO;
    const ONE: Self = super::ONE;
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn norm_sqr(self) -> f64 {
        C64::norm_sqr(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_c64(self) -> C64 {
        self
    }
}

struct Reflector<T> {
    /// First row the reflector acts on.
    start: usize,
    u: Vec<T>,
    beta: f64,
}

fn decompose_generic<T: Elem>(
    mut a: Vec<T>,
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    let mut reflectors: Vec<Reflector<T>> = Vec::new();
    let mut sub: Vec<T> = Vec::with_capacity(n.saturating_sub(1));

    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let m = n - start;
        let x: Vec<T> = (start..n).map(|i| a[i * n + k]).collect();
        let alpha = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let x0 = x[0];
        if alpha == 0.0 {
            sub.push(T::ZERO);
            continue;
        }
        let phase = if x0.abs() == 0.0 {
            T::ONE
        } else {
            x0.scale(1.0 / x0.abs())
        };
        let mut u = x;
        u[0] += phase.scale(alpha);
        let beta = 1.0 / (alpha * (alpha + x0.abs()));
        sub.push(-phase.scale(alpha));

        // Trailing block B <- P B P with P = I - beta u u^†.
        let mut p = vec![T::ZERO; m];
        for i in 0..m {
            let row = &a[(start + i) * n + start..(start + i) * n + n];
            let mut acc = T::ZERO;
            for (bij, &uj) in row.iter().zip(&u) {
                acc += *bij * uj;
            }
            p[i] = acc.scale(beta);
        }
        let mut upk = T::ZERO;
        for (ui, pi) in u.iter().zip(&p) {
            upk += ui.conj() * *pi;
        }
        let kk = upk.re() * beta * 0.5;
        let q: Vec<T> = p
            .iter()
            .zip(&u)
            .map(|(pi, ui)| *pi - ui.scale(kk))
            .collect();
        for i in 0..m {
            let (ui, qi) = (u[i], q[i]);
            let row = &mut a[(start + i) * n + start..(start + i) * n + n];
            for j in 0..m {
                row[j] -= ui * q[j].conj() + qi * u[j].conj();
            }
        }
        if want_vectors {
            reflectors.push(Reflector { start, u, beta });
        }
    }
    if n >= 2 {
        sub.push(a[(n - 1) * n + (n - 2)]);
    }

    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i].re()).collect();
    let mut e: Vec<f64> = sub.iter().map(|s| s.abs()).collect();
    e.push(0.0);

    if !want_vectors {
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        return Ok((d, None));
    }

    // Phases making the off-diagonal real and non-negative.
    let mut phases = vec![T::ONE; n];
    for k in 0..n - 1 {
        let s = sub[k];
        phases[k + 1] = if s.abs() == 0.0 {
            phases[k]
        } else {
            phases[k] * s.scale(1.0 / s.abs())
        };
    }

    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &mut e, Some(&mut zt))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    // W = D Z, then V = Q W with Q = P_0 P_1 ... applied right to left.
    let mut w = vec![T::ZERO; n * n];
    for (col, &src) in order.iter().enumerate() {
        let zrow = &zt[src * n..src * n + n];
        for i in 0..n {
            w[i * n + col] = phases[i].scale(zrow[i]);
        }
    }
    let mut v = vec![T::ZERO; n];
    for r in reflectors.iter().rev() {
        let m = n - r.start;
        v.iter_mut().for_each(|x| *x = T::ZERO);
        for i in 0..m {
            let ui = r.u[i].conj();
            let row = &w[(r.start + i) * n..(r.start + i + 1) * n];
            for (vj, wj) in v.iter_mut().zip(row) {
                *vj += ui * *wj;
            }
        }
        for i in 0..m {
            let f = r.u[i].scale(r.beta);
            let row = &mut w[(r.start + i) * n..(r.start + i + 1) * n];
            for (wj, vj) in row.iter_mut().zip(&v) {
                *wj -= f * *vj;
            }
        }
    }
    let vectors = ComplexMatrix::from_vec(n, n, w.into_iter().map(T::to_c64).collect())?;
    Ok((values, Some(vectors)))
}

/// Implicit QL on a symmetric tridiagonal matrix (`e[i]` couples `i` and
/// `i + 1`, `e[n-1] == 0`). Rotations are accumulated into the rows of
/// `zt`, which therefore ends up holding the eigenvectors as rows.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence {
                        method: "tridiagonal QL",
                        iterations: sweeps - 1,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
