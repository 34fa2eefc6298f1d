//! Small dense linear algebra kernel: row-major matrices, Cholesky, LU
//! log-determinants and a cyclic Jacobi symmetric eigensolver.
//!
//! Dimensions handled here are modest (p ≤ a few hundred), so the routines
//! favour clarity over blocking.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
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
        Matrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Matrix<T>) -> T {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = T::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                if (a - b).abs() > tol * T::one().max(a.abs()).max(b.abs()) {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix with `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    /// `P A Pᵀ` where `perm[k]` is the original index placed at position `k`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.principal_submatrix(perm)
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::new(self)
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Result<Self> {
        Ok(self.cholesky()?.inverse())
    }

    /// `log |A|` of a symmetric positive definite matrix.
    pub fn spd_log_det(&self) -> Result<T> {
        Ok(self.cholesky()?.log_det())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Sign and `log |det A|` by LU with partial pivoting. Sign is 0 for a
    /// singular matrix.
    pub fn lu_log_abs_det(&self) -> (T, T) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = T::one();
        let mut log_abs = T::zero();
        for k in 0..n {
            let (piv, pmax) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold(
                        (k, T::neg_infinity()),
                        |acc, x| if x.1 > acc.1 { x } else { acc },
                    );
            if pmax == T::zero() {
                return (T::zero(), T::neg_infinity());
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                sign = -sign;
            }
            let akk = a[(k, k)];
            if akk < T::zero() {
                sign = -sign;
            }
            log_abs += akk.abs().ln();
            for i in (k + 1)..n {
                let f = a[(i, k)] / akk;
                if f == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        (sign, log_abs)
    }

    /// Symmetric eigendecomposition by cyclic Jacobi rotations.
    pub fn sym_eigen(&self) -> SymEigen<T> {
        SymEigen::new(self)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

/// Lower Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(
                "cholesky of non-square matrix".into(),
            ));
        }
        let n = a.nrows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::not_pd(format!("pivot {j}")));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l.data[ri + k] * l.data[rj + k];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn l(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn into_l(self) -> Matrix<T> {
        self.l
    }

    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.l.nrows()).map(|i| two * self.l[(i, i)].ln()).sum()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.nrows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `L⁻¹`, lower triangular.
    pub fn l_inverse(&self) -> Matrix<T> {
        let n = self.l.nrows();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            inv[(j, j)] = T::one() / self.l[(j, j)];
            for i in (j + 1)..n {
                let mut s = T::zero();
                for k in j..i {
                    s += self.l[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -s / self.l[(i, i)];
            }
        }
        inv
    }

    /// `A⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.nrows();
        let li = self.l_inverse();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::zero();
                for k in i..n {
                    s += li[(k, i)] * li[(k, j)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> SymEigen<T> {
    fn new(a: &Matrix<T>) -> Self {
        assert!(a.is_square());
        let n = a.nrows();
        let mut m = a.clone();
        m.symmetrize();
        let mut v = Matrix::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            let scale: T = m.frobenius_norm();
            if off.sqrt() <= eps * scale || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| m[(a, a)].partial_cmp(&m[(b, b)]).unwrap());
        let values = order.iter().map(|&k| m[(k, k)]).collect();
        let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        SymEigen { values, vectors }
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().unwrap()
    }

    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: T = (0..n)
                    .map(|k| self.vectors[(i, k)] * fl[k] * self.vectors[(j, k)])
                    .sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix<f64> {
        Matrix::from_rows(&[
            vec![25.0, 15.0, -5.0],
            vec![15.0, 18.0, 0.0],
            vec![-5.0, 0.0, 11.0],
        ])
        .unwrap()
    }

    #[test]
    fn cholesky_known_factor() {
        let c = spd3().cholesky().unwrap();
        let l = c.l();
        assert!((l[(0, 0)] - 5.0).abs() < 1e-14);
        assert!((l[(1, 0)] - 3.0).abs() < 1e-14);
        assert!((l[(1, 1)] - 3.0).abs() < 1e-14);
        assert!((l[(2, 0)] + 1.0).abs() < 1e-14);
        assert!((l[(2, 1)] - 1.0).abs() < 1e-14);
        assert!((l[(2, 2)] - 3.0).abs() < 1e-14);
        // det = (5*3*3)^2
        assert!((c.log_det() - (2025.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = spd3();
        let inv = a.spd_inverse().unwrap();
        let prod = &a * &inv;
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-13);
        let x = a.cholesky().unwrap().solve(&[1.0, 2.0, 3.0]);
        let bx: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|k| a[(i, k)] * x[k]).sum())
            .collect();
        assert!((bx[0] - 1.0).abs() < 1e-12 && (bx[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn not_pd_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(a.cholesky(), Err(Error::NotPd(_))));
        let (sign, lad) = a.lu_log_abs_det();
        assert_eq!(sign, -1.0);
        assert!((lad - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn lu_matches_cholesky() {
        let a = spd3();
        let (s, l) = a.lu_log_abs_det();
        assert_eq!(s, 1.0);
        assert!((l - a.spd_log_det().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigen() {
        let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = a.sym_eigen();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let back = e.reconstruct_with(|x| x);
        assert!(back.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn jacobi_f32() {
        let a: Matrix<f32> = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let e = a.sym_eigen();
        let tr: f32 = e.values.iter().sum();
        assert!((tr - 7.0).abs() < 1e-5);
    }
}
