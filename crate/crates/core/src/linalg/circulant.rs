//! Circulant matrices, diagonalized by the discrete Fourier transform.
//!
//! `C[i][j] = r[(j - i) mod N]`. The Fourier modes `v_m[j] = ω^{jm}` with
//! `ω = e^{2πi/N}` are eigenvectors with eigenvalue `λ_m = Σ_l r_l ω^{lm}`.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Circulant {
    first_row: Vec<C64>,
    symbol: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Circulant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Circulant")
            .field("n", &self.len())
            .field("first_row", &self.first_row)
            .finish()
    }
}

impl Circulant {
    pub fn new(first_row: Vec<C64>) -> Self {
        let n = first_row.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut symbol = first_row.clone();
        inverse.process(&mut symbol);
        Self {
            first_row,
            symbol,
            forward,
            inverse,
        }
    }

    /// The circulant whose eigenvalue on mode `m` is `symbol[m]`.
    pub fn from_symbol(symbol: Vec<C64>) -> Self {
        let n = symbol.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut first_row = symbol.clone();
        forward.process(&mut first_row);
        let inv_n = 1.0 / n as f64;
        first_row.iter_mut().for_each(|z| *z *= inv_n);
        Self {
            first_row,
            symbol,
            forward,
            inverse,
        }
    }

    /// Recognizes a circulant matrix; `None` if any entry breaks the pattern
    /// by more than `1e-14` of the largest entry.
    pub fn from_matrix(m: &ComplexMatrix) -> Option<Self> {
        if !m.is_square() || m.rows() == 0 {
            return None;
        }
        let n = m.rows();
        let tol = 1e-14 * m.max_abs();
        let r = m.row(0);
        for i in 1..n {
            let row = m.row(i);
            for j in 0..n {
                if (row[j] - r[(j + n - i) % n]).norm() > tol {
                    return None;
                }
            }
        }
        Some(Self::new(r.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.first_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_row.is_empty()
    }

    pub fn first_row(&self) -> &[C64] {
        &self.first_row
    }

    /// Eigenvalue `λ_m` belonging to the Fourier mode `ω^{jm}`.
    pub fn symbol(&self) -> &[C64] {
        &self.symbol
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |i, j| self.first_row[(j + n - i) % n])
    }

    /// Largest `|Im λ|` relative to the largest `|λ|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.symbol.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        self.symbol.iter().fold(0.0f64, |a, z| a.max(z.im.abs())) / scale
    }

    /// The circulant `f(C)`, obtained by mapping every eigenvalue.
    pub fn map_symbol(&self, f: impl Fn(C64) -> C64) -> Self {
        let n = self.len();
        let mut row: Vec<C64> = self.symbol.iter().map(|&l| f(l)).collect();
        self.forward.process(&mut row);
        let inv_n = 1.0 / n as f64;
        row.iter_mut().for_each(|z| *z *= inv_n);
        Self {
            first_row: row,
            symbol: self.symbol.iter().map(|&l| f(l)).collect(),
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
        }
    }

    /// `C x`, in place.
    pub fn apply(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.len(), "circulant apply dimension");
        self.forward.process(x);
        let inv_n = 1.0 / self.len() as f64;
        for (z, l) in x.iter_mut().zip(&self.symbol) {
            *z *= l * inv_n;
        }
        self.inverse.process(x);
    }

    /// `M <- C M`, one transform per column.
    pub fn apply_left(&self, m: &mut ComplexMatrix) {
        let n = self.len();
        assert_eq!(m.rows(), n, "circulant apply_left dimension");
        let mut col = vec![ZERO; n];
        for j in 0..m.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = m[(i, j)];
            }
            self.apply(&mut col);
            m.set_column(j, &col);
        }
    }
}

/// `e^{−iθC}` for the Hermitian circulant with the given first row.
pub fn circulant_exp(first_row: &[C64], theta: f64) -> Result<ComplexMatrix> {
    let c = Circulant::new(first_row.to_vec());
    let defect = c.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian {
            deviation: defect,
            scale: 1.0,
        });
    }
    Ok(c.map_symbol(|l| C64::from_polar(1.0, -theta * l.re))
        .to_matrix())
}

#[cfg(test)]
mod tests {
    use super::super::{matmul, unitary_exp};
    use super::*;

    fn second_difference(n: usize) -> Vec<C64> {
        let mut r = vec![ZERO; n];
        r[0] = C64::new(-2.0, 0.0);
        r[1] = C64::new(1.0, 0.0);
        r[n - 1] = C64::new(1.0, 0.0);
        r
    }

    #[test]
    fn symbol_of_second_difference() {
        let n = 16;
        let c = Circulant::new(second_difference(n));
        for (m, l) in c.symbol().iter().enumerate() {
            let want = 2.0 * (2.0 * std::f64::consts::PI * m as f64 / n as f64).cos() - 2.0;
            assert!((l.re - want).abs() < 1e-13 && l.im.abs() < 1e-13);
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let n = 12;
        let row: Vec<C64> = (0..n)
            .map(|k| C64::new(k as f64 * 0.3 - 1.0, (k * k) as f64 * 0.01))
            .collect();
        let c = Circulant::new(row);
        let dense = c.to_matrix();
        let x: Vec<C64> = (0..n).map(|k| C64::new((k as f64).sin(), 0.5)).collect();
        let want = dense.matvec(&x);
        let mut got = x.clone();
        c.apply(&mut got);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
        assert!(Circulant::from_matrix(&dense).is_some());
        let mut broken = dense.clone();
        broken[(3, 4)] += C64::new(1.0, 0.0);
        assert!(Circulant::from_matrix(&broken).is_none());
    }

    #[test]
    fn exponential_matches_eigendecomposition() {
        let n = 10;
        let row = second_difference(n);
        let dense = Circulant::new(row.clone()).to_matrix();
        let via_fft = circulant_exp(&row, 0.37).unwrap();
        let via_eig = unitary_exp(&dense, 0.37).unwrap();
        assert!((&via_fft - &via_eig).max_abs() < 1e-13);

        let mut m = ComplexMatrix::identity(n);
        Circulant::from_matrix(&via_fft).unwrap().apply_left(&mut m);
        assert!((&m - &via_fft).max_abs() < 1e-13);
        let uu = matmul(&via_fft.adjoint(), &via_fft).unwrap();
        assert!((&uu - &ComplexMatrix::identity(n)).max_abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian_rows() {
        let mut row = vec![ZERO; 4];
        row[1] = C64::new(1.0, 0.0);
        assert!(matches!(
            circulant_exp(&row, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }
}
