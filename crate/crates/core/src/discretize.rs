//! Periodic grid and discrete derivative operators.
//!
//! Finite differences use the forward stencil `D_F`, its negative adjoint
//! `D_B` and `D_2 = D_B D_F`; higher orders are products of those.
//! Spectral derivatives are dense circulants with Fourier multiplier
//! `(iξ)^k`. Derivative matrices are scaled by `1/Δx`, so they approximate
//! `∂_x` in physical units on any interval.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{matmul, Circulant, ComplexMatrix, C64, ZERO};

/// Uniform periodic grid on `[a, b)` with `n` nodes `x_j = a + (b − a) j / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!("need a < b, got [{a}, {b}]")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count must be even and at least 4, got {n}"
            )));
        }
        Ok(Self { a, b, n })
    }

    /// `[−π, π)` with `n` nodes.
    pub fn periodic_pi(n: usize) -> Result<Self> {
        Self::new(-PI, PI, n)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + (self.b - self.a) * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Angular wavenumber of DFT mode `m` (modes at or above `n/2` are
    /// negative frequencies).
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n as i64;
        let m = m as i64;
        let signed = if m < n / 2 { m } else { m - n };
        2.0 * PI / self.length() * signed as f64
    }

    /// Samples of `f` at the nodes.
    pub fn sample(&self, f: &Expr) -> Result<Vec<f64>> {
        self.nodes().into_iter().map(|x| Ok(f.eval(x)?)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    FiniteDifference,
    Spectral,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::FiniteDifference => "fd",
            SchemeKind::Spectral => "spectral",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fd" | "finite-difference" | "finite_difference" | "finitedifference" => {
                Ok(SchemeKind::FiniteDifference)
            }
            "spectral" | "fourier" => Ok(SchemeKind::Spectral),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

fn circulant_from_stencil(n: usize, stencil: &[(usize, f64)]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for &(offset, v) in stencil {
            m[(i, (i + offset) % n)] = C64::new(v, 0.0);
        }
    }
    m
}

/// `D_F`: `(u_{j+1} − u_j)/Δx` with wraparound.
pub fn build_forward_diff(g: &Grid) -> ComplexMatrix {
    let s = 1.0 / g.dx();
    circulant_from_stencil(g.n, &[(0, -s), (1, s)])
}

/// `D_B = −D_F^†`: `(u_j − u_{j−1})/Δx`.
pub fn build_backward_diff(g: &Grid) -> ComplexMatrix {
    -&build_forward_diff(g).adjoint()
}

/// `D_2`: `(u_{j+1} − 2u_j + u_{j−1})/Δx²`.
pub fn build_laplacian(g: &Grid) -> ComplexMatrix {
    let s = 1.0 / g.dx();
    // Written as the products D_B D_F produces so both agree bit for bit.
    let s2 = s * s;
    circulant_from_stencil(g.n, &[(g.n - 1, s2), (0, -2.0 * s2), (1, s2)])
}

/// `D_k = D_2^{k/2}` for even `k`, `D_F D_2^{(k−1)/2}` for odd `k`; `D_0 = I`.
pub fn build_dk(g: &Grid, k: usize) -> ComplexMatrix {
    let d2 = build_laplacian(g);
    let even = d2.pow(k / 2).expect("square");
    if k.is_multiple_of(2) {
        even
    } else {
        matmul(&build_forward_diff(g), &even).expect("square")
    }
}

/// Same as [`build_dk`] but with `D_B` in the odd factor.
pub fn build_dk_backward(g: &Grid, k: usize) -> ComplexMatrix {
    let d2 = build_laplacian(g);
    let even = d2.pow(k / 2).expect("square");
    if k.is_multiple_of(2) {
        even
    } else {
        matmul(&build_backward_diff(g), &even).expect("square")
    }
}

/// Fourier multiplier `(iξ_m)^k` of the spectral `k`-th derivative, in DFT
/// order. The unpaired Nyquist mode gets 0 for odd `k`.
pub fn spectral_symbol(g: &Grid, k: usize) -> Vec<C64> {
    (0..g.n)
        .map(|m| {
            if k % 2 == 1 && m == g.n / 2 {
                ZERO
            } else {
                C64::new(0.0, g.wavenumber(m)).powu(k as u32)
            }
        })
        .collect()
}

/// Spectral `k`-th derivative `IDFT · diag((iξ)^k) · DFT` as a dense matrix.
pub fn build_spectral_derivative(g: &Grid, k: usize) -> ComplexMatrix {
    let n = g.n;
    if k == 0 {
        return ComplexMatrix::identity(n);
    }
    let row = Circulant::from_symbol(spectral_symbol(g, k));
    // The symbol is even (k even) or odd (k odd) in m, so the row is real
    // and (anti)symmetric; impose both exactly.
    let r = row.first_row();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let real: Vec<f64> = (0..n)
        .map(|j| 0.5 * (r[j].re + sign * r[(n - j) % n].re))
        .collect();
    ComplexMatrix::from_fn(n, n, |i, j| C64::new(real[(j + n - i) % n], 0.0))
}

/// `diag(f(x_j))`.
pub fn build_diag(g: &Grid, f: &Expr) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_real_diag(&g.sample(f)?))
}
