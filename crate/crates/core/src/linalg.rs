//! Dense symmetric linear algebra: a small row-major matrix type, the cyclic
//! Jacobi eigensolver, symmetric square roots and subspace geometry.
//!
//! Dimensions in this domain are small (p rarely exceeds a few dozen), so every
//! routine favours accuracy and simplicity over blocking or BLAS.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{PhdError, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(PhdError::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(PhdError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(PhdError::DimensionMismatch("ragged columns".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `a bᵀ`.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.matvec(x))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self += s * a bᵀ` without materialising the outer product.
    pub fn add_outer(&mut self, s: T, a: &[T], b: &[T]) {
        assert_eq!((self.rows, self.cols), (a.len(), b.len()));
        for (i, &ai) in a.iter().enumerate() {
            let f = s * ai;
            for (d, &bj) in self.data[i * self.cols..(i + 1) * self.cols].iter_mut().zip(b) {
                *d += f * bj;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Real> Add<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        let mut out = self.clone();
        out.add_scaled(T::one(), rhs);
        out
    }
}

impl<'a, T: Real> Sub<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        let mut out = self.clone();
        out.add_scaled(-T::one(), rhs);
        out
    }
}

impl<'a, T: Real> Mul<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sub_vec<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale_vec<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// Symmetric matrix. The stored form is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T>(Matrix<T>);

impl<T: Real> SymMatrix<T> {
    /// Validates squareness, finiteness and symmetry, then mirrors the upper
    /// triangle. Symmetry is checked to `1e-12 · max(1, max|a|)`.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(PhdError::InvalidMatrix(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if !m.is_finite() {
            return Err(PhdError::InvalidMatrix("non-finite entry".into()));
        }
        let tol = T::tol(1e-12) * T::one().max(m.max_abs());
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(PhdError::InvalidMatrix(format!(
                        "asymmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::mirror_upper(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2`. Used for products that are symmetric in
    /// exact arithmetic.
    pub fn symmetrize(m: Matrix<T>) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let n = m.nrows();
        let half = T::lit(0.5);
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = half * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self(out)
    }

    fn mirror_upper(mut m: Matrix<T>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                m[(j, i)] = m[(i, j)];
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn diag(values: &[T]) -> Self {
        Self(Matrix::diag(values))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    /// `B A B` for symmetric `B`, symmetrized.
    pub fn sandwich(&self, outer: &SymMatrix<T>) -> SymMatrix<T> {
        SymMatrix::symmetrize(outer.0.matmul(&self.0).matmul(&outer.0))
    }

    pub fn cast<U: Real>(&self) -> SymMatrix<U> {
        SymMatrix(self.0.cast())
    }
}

impl<T> std::ops::Deref for SymMatrix<T> {
    type Target = Matrix<T>;
    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

/// Eigenvalues sorted by descending absolute value with paired orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }

    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix<T> {
        let p = self.dim();
        let scaled = Matrix::from_fn(p, p, |i, j| self.vectors[(i, j)] * self.values[j]);
        SymMatrix::symmetrize(scaled.matmul(&self.vectors.transpose()))
    }
}

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back sorted by descending `|λ|` (ties: larger signed value
/// first, then original diagonal position). Each eigenvector is sign-normalised
/// so that its largest-magnitude entry is positive; ties in magnitude resolve to
/// the lowest index.
pub fn sym_eigen<T: Real>(a: &SymMatrix<T>) -> Result<EigenSystem<T>> {
    if !a.is_finite() {
        return Err(PhdError::InvalidMatrix("non-finite entry".into()));
    }
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::<T>::identity(n);
    let scale = m.frobenius_norm();
    let threshold = T::epsilon() * scale;

    let mut converged = scale == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: T = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Skip rotations whose effect is below the diagonal's resolution.
                if apq.abs() <= T::epsilon() * T::lit(0.01) * (app.abs() + aqq.abs()) {
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(PhdError::InvalidMatrix("Jacobi iteration did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (m[(i, i)], m[(j, j)]);
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap()
            .then(b.partial_cmp(&a).unwrap())
            .then(i.cmp(&j))
    });

    let values: Vec<T> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        canonicalize_sign(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, dst)] = x;
        }
    }
    Ok(EigenSystem { values, vectors })
}

fn canonicalize_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn spd_eigen<T: Real>(a: &SymMatrix<T>) -> Result<EigenSystem<T>> {
    let eig = sym_eigen(a)?;
    let max = eig.values.iter().fold(T::zero(), |m, &v| m.max(v));
    let min = eig.values.iter().fold(T::infinity(), |m, &v| m.min(v));
    if !(max > T::zero()) || min <= T::lit(1e-12) * max {
        return Err(PhdError::NotPositiveDefinite { eigenvalue: min.as_f64() });
    }
    Ok(eig)
}

fn spectral_map<T: Real>(eig: &EigenSystem<T>, f: impl Fn(T) -> T) -> SymMatrix<T> {
    let mapped = EigenSystem { values: eig.values.iter().map(|&l| f(l)).collect(), vectors: eig.vectors.clone() };
    mapped.reconstruct()
}

/// Symmetric inverse square root `A^{-1/2}` of a positive definite matrix.
pub fn inv_sqrt<T: Real>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = spd_eigen(a)?;
    Ok(spectral_map(&eig, |l| T::one() / l.sqrt()))
}

/// Symmetric square root `A^{1/2}` of a positive definite matrix.
pub fn sqrt_spd<T: Real>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = spd_eigen(a)?;
    Ok(spectral_map(&eig, |l| l.sqrt()))
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn spd_inverse<T: Real>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let n = a.dim();
    let mut l = Matrix::<T>::zeros(n, n);
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)]));
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::lit(1e-14) * max_diag) {
            return Err(PhdError::NotPositiveDefinite { eigenvalue: d.as_f64() });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    // Invert the lower-triangular factor column by column, then form L⁻ᵀ L⁻¹.
    let mut linv = Matrix::<T>::zeros(n, n);
    for c in 0..n {
        linv[(c, c)] = T::one() / l[(c, c)];
        for i in (c + 1)..n {
            let mut s = T::zero();
            for k in c..i {
                s -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(SymMatrix::symmetrize(linv.transpose().matmul(&linv)))
}

/// Orthonormal column set spanning a K-dimensional subspace of `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<T> {
    columns: Matrix<T>,
}

impl<T: Real> Basis<T> {
    /// Validates orthonormality of the columns to `1e-10`.
    pub fn new(columns: Matrix<T>) -> Result<Self> {
        if columns.ncols() > columns.nrows() {
            return Err(PhdError::InvalidMatrix(format!(
                "basis has {} columns in dimension {}",
                columns.ncols(),
                columns.nrows()
            )));
        }
        if !columns.is_finite() {
            return Err(PhdError::InvalidMatrix("non-finite basis entry".into()));
        }
        let gram = columns.transpose().matmul(&columns);
        let err = gram.max_abs_diff(&Matrix::identity(columns.ncols()));
        if err > T::tol(1e-10) {
            return Err(PhdError::InvalidMatrix(format!("basis columns not orthonormal (error {err:e})")));
        }
        Ok(Self { columns })
    }

    pub fn from_vectors(vectors: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_columns(vectors)?)
    }

    /// First `k` eigenvectors of an eigensystem.
    pub fn leading(eig: &EigenSystem<T>, k: usize) -> Result<Self> {
        let p = eig.dim();
        Self::new(Matrix::from_fn(p, k, |i, j| eig.vectors[(i, j)]))
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &Matrix<T> {
        &self.columns
    }

    pub fn column(&self, k: usize) -> Vec<T> {
        self.columns.column(k)
    }

    /// `Γ Γᵀ`.
    pub fn projector(&self) -> SymMatrix<T> {
        SymMatrix::symmetrize(self.columns.matmul(&self.columns.transpose()))
    }

    /// `v − Γ Γᵀ v`.
    pub fn residual(&self, v: &[T]) -> Vec<T> {
        let coef = self.columns.transpose().matvec(v);
        let proj = self.columns.matvec(&coef);
        sub_vec(v, &proj)
    }

    pub fn cast<U: Real>(&self) -> Basis<U> {
        Basis { columns: self.columns.cast() }
    }
}

/// `I_p − Γ Γᵀ`.
pub fn residual_projector<T: Real>(b: &Basis<T>) -> SymMatrix<T> {
    let mut m = Matrix::identity(b.dim());
    m.add_scaled(-T::one(), b.projector().as_matrix());
    SymMatrix::symmetrize(m)
}

/// Sine of the angle between a unit vector and its projection onto `span(b)`.
pub fn sine_to_subspace<T: Real>(v: &[T], b: &Basis<T>) -> Result<T> {
    if v.len() != b.dim() {
        return Err(PhdError::DimensionMismatch(format!("vector of length {} vs basis dim {}", v.len(), b.dim())));
    }
    let len = norm(v);
    if !len.is_finite() || (len - T::one()).abs() > T::tol(1e-10) {
        return Err(PhdError::InvalidVector(format!("expected a unit vector, norm is {len}")));
    }
    Ok(norm(&b.residual(v)).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(p: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrize(&m + &m.transpose())
    }

    fn random_spd(p: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let mut a = m.matmul(&m.transpose());
        a.add_scaled(0.5, &Matrix::identity(p));
        SymMatrix::symmetrize(a)
    }

    fn random_basis(p: usize, k: usize, seed: u64) -> Basis<f64> {
        let eig = sym_eigen(&random_sym(p, seed)).unwrap();
        Basis::leading(&eig, k).unwrap()
    }

    #[test]
    fn diagonal_eigen_orders_by_magnitude() {
        let eig = sym_eigen(&SymMatrix::diag(&[3.0, -5.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![-5.0, 3.0, 1.0]);
        let expect = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(eig.vectors, expect);
    }

    #[test]
    fn identity_eigen() {
        let eig = sym_eigen(&SymMatrix::<f64>::identity(4)).unwrap();
        assert!(eig.values.iter().all(|&v| v == 1.0));
        assert_eq!(eig.vectors, Matrix::identity(4));
    }

    #[test]
    fn magnitude_ties_prefer_positive_value() {
        let eig = sym_eigen(&SymMatrix::diag(&[-2.0, 2.0, 1.0])).unwrap();
        assert_eq!(eig.values, vec![2.0, -2.0, 1.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::symmetrize(Matrix::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]]).unwrap());
        assert!(matches!(sym_eigen(&m), Err(PhdError::InvalidMatrix(_))));
        assert!(SymMatrix::new(Matrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn random_reconstruction_and_invariants() {
        for (seed, p) in (0..12u64).zip([1usize, 2, 3, 4, 5, 7, 8, 10, 12, 15, 18, 20]) {
            let a = random_sym(p, seed);
            let eig = sym_eigen(&a).unwrap();
            assert!(eig.reconstruct().max_abs_diff(&a) <= 1e-9, "p = {p}");
            let gram = eig.vectors.transpose().matmul(&eig.vectors);
            assert!(gram.max_abs_diff(&Matrix::identity(p)) <= 1e-10);
            let anorm = a.frobenius_norm();
            for k in 0..p {
                let v = eig.vector(k);
                let r = sub_vec(&a.matvec(&v), &scale_vec(&v, eig.values[k]));
                assert!(norm(&r) <= 1e-9 * (1.0 + anorm));
                let big = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                assert!(big > 0.0);
            }
            for w in eig.values.windows(2) {
                assert!(w[0].abs() >= w[1].abs());
            }
        }
    }

    #[test]
    fn inverse_square_root() {
        assert_eq!(inv_sqrt(&SymMatrix::<f64>::identity(3)).unwrap(), SymMatrix::identity(3));
        let r = inv_sqrt(&SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&Matrix::diag(&[0.5, 1.0 / 3.0])) < 1e-15);
        for seed in 0..5 {
            let a = random_spd(6, 100 + seed);
            let r = inv_sqrt(&a).unwrap();
            let rar = r.matmul(&a).matmul(&r);
            assert!(rar.max_abs_diff(&Matrix::identity(6)) <= 1e-9);
            let comm = r.matmul(&a).max_abs_diff(&a.matmul(&r));
            assert!(comm <= 1e-9);
            let s = sqrt_spd(&a).unwrap();
            assert!(s.matmul(&r).max_abs_diff(&Matrix::identity(6)) <= 1e-9);
        }
    }

    #[test]
    fn non_positive_definite_is_reported() {
        match inv_sqrt(&SymMatrix::diag(&[1.0, -2.0])) {
            Err(PhdError::NotPositiveDefinite { eigenvalue }) => assert_eq!(eigenvalue, -2.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(spd_inverse(&SymMatrix::diag(&[1.0, 0.0])), Err(PhdError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn cholesky_inverse() {
        for seed in 0..5 {
            let a = random_spd(7, 200 + seed);
            let inv = spd_inverse(&a).unwrap();
            assert!(inv.matmul(&a).max_abs_diff(&Matrix::identity(7)) <= 1e-10);
        }
    }

    #[test]
    fn residual_projector_cases() {
        let full = random_basis(4, 4, 3);
        assert!(residual_projector(&full).max_abs() < 1e-12);

        let e1 = Basis::from_vectors(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(residual_projector(&e1).as_matrix(), &Matrix::diag(&[0.0, 1.0, 1.0]));

        let b = random_basis(6, 2, 9);
        let q = residual_projector(&b);
        assert!(q.matmul(&q).max_abs_diff(&q) <= 1e-10);
        for k in 0..2 {
            assert!(norm(&q.matvec(&b.column(k))) <= 1e-10);
        }
    }

    #[test]
    fn sine_cases() {
        let b = Basis::from_vectors(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(sine_to_subspace(&[1.0, 0.0], &b).unwrap(), 0.0);
        assert_eq!(sine_to_subspace(&[0.0, 1.0], &b).unwrap(), 1.0);
        let t = std::f64::consts::FRAC_PI_6;
        assert!((sine_to_subspace(&[t.cos(), t.sin()], &b).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(sine_to_subspace(&[2.0, 0.0], &b), Err(PhdError::InvalidVector(_))));
    }

    #[test]
    fn sine_matches_projection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let b = random_basis(5, 2, 11);
        let p = b.projector();
        for _ in 0..50 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = scale_vec(&v, 1.0 / norm(&v));
            let pv = p.matvec(&v);
            let expect = (1.0 - dot(&pv, &pv)).max(0.0).sqrt();
            assert!((sine_to_subspace(&v, &b).unwrap() - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn single_precision_eigen() {
        let a: SymMatrix<f32> = random_sym(6, 5).cast();
        let eig = sym_eigen(&a).unwrap();
        assert!(eig.reconstruct().max_abs_diff(&a) <= 1e-5);
    }
}
