//! Operator 2-norm (largest singular value).
//!
//! Small matrices form the Gram matrix and take its largest eigenvalue.
//! Larger ones run Lanczos on `M^†M` with full reorthogonalization, which
//! needs only products with `M` and `M^†`; sparse inputs get a compressed
//! row representation for those products.

use super::{eig::tridiagonal_eig, hermitian_eigvals, matmul, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Largest dimension handled through the dense Gram matrix.
pub const DENSE_NORM_LIMIT: usize = 256;

const LANCZOS_TOL: f64 = 1e-13;
const LANCZOS_CHECK_EVERY: usize = 5;
const LANCZOS_MAX_ITERS: usize = 400;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 20_000;

pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 || m.is_zero() {
        return Ok(0.0);
    }
    if m.is_diagonal() {
        return Ok(m.diagonal().iter().fold(0.0, |a, z| a.max(z.norm())));
    }
    if r.max(c) <= DENSE_NORM_LIMIT {
        let gram = if c <= r {
            matmul(&m.adjoint(), m)?
        } else {
            matmul(m, &m.adjoint())?
        };
        let top = hermitian_eigvals(&gram.hermitian_part())?
            .last()
            .copied()
            .unwrap_or(0.0);
        return Ok(top.max(0.0).sqrt());
    }
    lanczos_norm(&Operator::new(m))
}

/// Plain power iteration on `M^†M`. Slower than [`spectral_norm`]; kept as
/// an independent cross-check.
pub fn power_iteration_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 || m.is_zero() {
        return Ok(0.0);
    }
    let op = Operator::new(m);
    let mut v = start_vector(m.cols());
    let mut prev = 0.0;
    for it in 1..=POWER_MAX_ITERS {
        let w = op.gram_apply(&v);
        let lambda = norm(&w);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|z| z / lambda).collect();
        if it > 1 && (lambda - prev).abs() <= POWER_TOL * lambda {
            return Ok(lambda.sqrt());
        }
        prev = lambda;
    }
    Err(Error::NoConvergence {
        method: "power iteration",
        iterations: POWER_MAX_ITERS,
    })
}

enum Operator<'a> {
    Dense(&'a ComplexMatrix),
    Sparse {
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<C64>,
    },
}

impl<'a> Operator<'a> {
    fn new(m: &'a ComplexMatrix) -> Self {
        let total = m.rows() * m.cols();
        if m.nnz() * 8 > total {
            return Operator::Dense(m);
        }
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, &z) in m.row(i).iter().enumerate() {
                if z != ZERO {
                    col_idx.push(j);
                    vals.push(z);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Operator::Sparse {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// `M^† M x`
    fn gram_apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Operator::Dense(m) => m.adjoint_matvec(&m.matvec(x)),
            Operator::Sparse {
                rows,
                cols,
                row_ptr,
                col_idx,
                vals,
            } => {
                let mut out = vec![ZERO; *cols];
                for i in 0..*rows {
                    let span = row_ptr[i]..row_ptr[i + 1];
                    let yi: C64 = col_idx[span.clone()]
                        .iter()
                        .zip(&vals[span.clone()])
                        .map(|(&j, &a)| a * x[j])
                        .sum();
                    if yi == ZERO {
                        continue;
                    }
                    for (&j, &a) in col_idx[span.clone()].iter().zip(&vals[span]) {
                        out[j] += a.conj() * yi;
                    }
                }
                out
            }
        }
    }

    fn cols(&self) -> usize {
        match self {
            Operator::Dense(m) => m.cols(),
            Operator::Sparse { cols, .. } => *cols,
        }
    }
}

fn lanczos_norm(op: &Operator<'_>) -> Result<f64> {
    let n = op.cols();
    let max_iters = n.min(LANCZOS_MAX_ITERS);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iters);
    let mut alphas = Vec::with_capacity(max_iters);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iters);
    let mut q = start_vector(n);
    let mut prev_top = f64::NAN;

    for k in 0..max_iters {
        let mut w = op.gram_apply(&q);
        let alpha = dot(&q, &w).re;
        basis.push(q);
        alphas.push(alpha);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        let done =
            k + 1 == max_iters || beta <= 1e-14 * alphas.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if done || (k + 1) % LANCZOS_CHECK_EVERY == 0 {
            let top = *tridiagonal_eig(&alphas, &betas)?.last().expect("nonempty");
            if done {
                return Ok(top.max(0.0).sqrt());
            }
            if (top - prev_top).abs() <= LANCZOS_TOL * top.abs() {
                return Ok(top.max(0.0).sqrt());
            }
            prev_top = top;
        }
        betas.push(beta);
        q = w.into_iter().map(|z| z / beta).collect();
    }
    Err(Error::NoConvergence {
        method: "Lanczos",
        iterations: max_iters,
    })
}

/// Deterministic, generic start vector (no structure shared with the
/// difference operators).
fn start_vector(n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|j| {
            let t = j as f64;
            C64::new(1.0 + 0.5 * (0.7 * t + 0.3).sin(), 0.25 * (1.3 * t).cos())
        })
        .collect();
    let s = norm(&v);
    v.into_iter().map(|z| z / s).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
