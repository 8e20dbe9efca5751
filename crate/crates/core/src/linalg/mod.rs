//! Dense complex matrices and the few decompositions the simulator needs.
//!
//! Every operator in the crate (difference matrices, Hamiltonians,
//! observables, propagators, nested commutators) is a [`ComplexMatrix`].
//! Matrices stay dense; products notice when one operand is mostly zeros
//! (the finite-difference stencils and their low-order commutators are
//! banded) and switch to a row-sparse kernel, otherwise they go through a
//! blocked GEMM.

mod circulant;
mod eig;
mod norm;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub use circulant::{circulant_exp, Circulant};
pub use eig::{hermitian_eig, hermitian_eigvals, tridiagonal_eig, HermitianEigen};
pub use norm::{power_iteration_norm, spectral_norm, DENSE_NORM_LIMIT};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Fraction of nonzeros below which products use the row-sparse kernel.
const SPARSE_DENSITY: f64 = 0.125;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[C64]) {
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && self
                .data
                .iter()
                .enumerate()
                .all(|(k, z)| k / self.cols == k % self.cols || *z == ZERO)
    }

    /// Largest entrywise deviation `|M - M^†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(
            self.is_square(),
            "hermitian_deviation needs a square matrix"
        );
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    /// `‖M − M†‖_max ≤ rel_tol · ‖M‖_max`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermitian_deviation() <= rel_tol * self.max_abs()
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let mut out = self.clone();
        for (o, a) in out.data.iter_mut().zip(&adj.data) {
            *o = (*o + a) * 0.5;
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M^† x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows, "adjoint_matvec dimension");
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// `diag(d) · M`
    pub fn scale_rows(&mut self, d: &[C64]) {
        assert_eq!(d.len(), self.rows);
        for (i, &s) in d.iter().enumerate() {
            for z in self.row_mut(i) {
                *z *= s;
            }
        }
    }

    /// `M · diag(d)`
    pub fn scale_cols(&mut self, d: &[C64]) {
        assert_eq!(d.len(), self.cols);
        for i in 0..self.rows {
            for (z, &s) in self.row_mut(i).iter_mut().zip(d) {
                *z *= s;
            }
        }
    }

    /// Integer power by repeated squaring; `M^0 = I`.
    pub fn pow(&self, mut n: usize) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                op: "pow",
                left: self.shape(),
                right: self.shape(),
            });
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut first = true;
        while n > 0 {
            if n & 1 == 1 {
                result = if first {
                    base.clone()
                } else {
                    matmul(&result, &base)?
                };
                first = false;
            }
            n >>= 1;
            if n > 0 {
                base = matmul(&base, &base)?;
            }
        }
        Ok(result)
    }

    fn density(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.nnz() as f64 / self.data.len() as f64
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(self - other)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for z in self.row(i).iter().take(8) {
                write!(f, "{:>10.3e}{:+.3e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Elementwise operators panic on shape mismatch; use `try_add`/`try_sub`
// when shapes come from user input.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

/// Matrix product `X · Y`.
pub fn matmul(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.cols != y.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let (m, k, n) = (x.rows, x.cols, y.cols);
    if m == 0 || n == 0 || k == 0 {
        return Ok(ComplexMatrix::zeros(m, n));
    }
    if x.density() <= SPARSE_DENSITY || y.density() <= SPARSE_DENSITY {
        return Ok(sparse_matmul(x, y));
    }
    let mut out = ComplexMatrix::zeros(m, n);
    // SAFETY: Complex64 is #[repr(C)] {re, im}, layout-identical to [f64; 2].
    // Buffers are exactly m*k, k*n and m*n long with row-major strides, and
    // `out` does not alias the inputs.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            x.data.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            y.data.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            out.data.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
    Ok(out)
}

/// Row-sparse product: row `i` of `X·Y` is `Σ_k X[i,k] · Y[k,:]`, skipping
/// zero entries of `X` and iterating only the nonzeros of each row of `Y`.
fn sparse_matmul(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let n = y.cols;
    let y_rows: Vec<Vec<(usize, C64)>> = (0..y.rows)
        .map(|k| {
            y.row(k)
                .iter()
                .enumerate()
                .filter(|(_, z)| **z != ZERO)
                .map(|(j, z)| (j, *z))
                .collect()
        })
        .collect();
    let mut out = ComplexMatrix::zeros(x.rows, n);
    for i in 0..x.rows {
        let xi = &x.data[i * x.cols..(i + 1) * x.cols];
        let orow = &mut out.data[i * n..(i + 1) * n];
        for (k, &a) in xi.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for &(j, b) in &y_rows[k] {
                orow[j] += a * b;
            }
        }
    }
    out
}

/// `[X, Y] = XY − YX`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() || x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            op: "commutator",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let mut xy = matmul(x, y)?;
    xy -= &matmul(y, x)?;
    Ok(xy)
}

/// `e^{−iθM}` for Hermitian `M`, through its eigendecomposition.
pub fn unitary_exp(m: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    Ok(eig.exp_i(-theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn naive(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(x.rows(), y.cols(), |i, j| {
            (0..x.cols()).map(|k| x[(i, k)] * y[(k, j)]).sum()
        })
    }

    #[test]
    fn identity_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 5, 5);
        let p = matmul(&ComplexMatrix::identity(5), &m).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn two_cycle_permutation_squares_to_identity() {
        let p = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(matmul(&p, &p).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn dense_and_sparse_kernels_agree_with_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 17, 23);
        let y = random_matrix(&mut rng, 23, 11);
        let p = matmul(&x, &y).unwrap();
        let q = naive(&x, &y);
        assert!((&p - &q).max_abs() < 1e-12);

        let mut band = ComplexMatrix::zeros(23, 23);
        for i in 0..23 {
            band[(i, i)] = C64::new(2.0, 0.5);
            band[(i, (i + 1) % 23)] = C64::new(-1.0, 0.0);
        }
        let p = matmul(&x, &band).unwrap();
        assert!((&p - &naive(&x, &band)).max_abs() < 1e-12);
        let p = matmul(&band, &y).unwrap();
        assert!((&p - &naive(&band, &y)).max_abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            matmul(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            commutator(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        let c = ComplexMatrix::zeros(3, 3);
        assert!(commutator(&c, &ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn commutator_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 6, 6);
        let y = random_matrix(&mut rng, 6, 6);
        assert!(commutator(&x, &x).unwrap().is_zero());
        let xy = commutator(&x, &y).unwrap();
        let yx = commutator(&y, &x).unwrap();
        assert_eq!(xy, -&yx);
    }

    #[test]
    fn adjoint_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 4, 7);
        assert_eq!(m.adjoint().adjoint(), m);
        assert_eq!(m.adjoint().shape(), (7, 4));
    }

    #[test]
    fn pow_matches_repeated_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 6, 6).scale(0.3);
        let mut acc = ComplexMatrix::identity(6);
        for n in 0..7 {
            let p = m.pow(n).unwrap();
            assert!((&p - &acc).max_abs() < 1e-12, "n = {n}");
            acc = matmul(&acc, &m).unwrap();
        }
    }

    #[test]
    fn unitary_exp_of_diagonal() {
        let v = [0.5, -1.0, 2.0];
        let m = ComplexMatrix::from_real_diag(&v);
        let u = unitary_exp(&m, 0.7).unwrap();
        for (i, &vi) in v.iter().enumerate() {
            let want = C64::from_polar(1.0, -0.7 * vi);
            assert_abs_diff_eq!(u[(i, i)].re, want.re, epsilon = 1e-14);
            assert_abs_diff_eq!(u[(i, i)].im, want.im, epsilon = 1e-14);
        }
        assert!((&unitary_exp(&m, 0.0).unwrap() - &ComplexMatrix::identity(3)).max_abs() < 1e-15);
    }
}
