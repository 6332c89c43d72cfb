// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense helpers: the 2×2 real matrices acting on `(f, ḟ)` and a
//! symmetric eigenvalue wrapper.

use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::Scalar;

/// Real 2×2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    /// Applies the matrix to the complex column `(x, y)`.
    #[inline]
    pub fn apply(&self, x: Complex<T>, y: Complex<T>) -> (Complex<T>, Complex<T>) {
        let m = &self.0;
        (x * m[0][0] + y * m[0][1], x * m[1][0] + y * m[1][1])
    }

    /// `tr[(A − B)(A − B)ᵀ]`.
    pub fn frobenius_distance_sq(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let d = self.0[i][j] - other.0[i][j];
                acc = acc + d * d;
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                acc = acc.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        acc
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Eigenvalues of a symmetric matrix, sorted in descending order.
///
/// Computed in double precision regardless of `T`.
pub fn symmetric_spectrum<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    let m64 = m.map(|x| x.to_f64_lossy());
    let m64 = (&m64 + m64.transpose()) * 0.5;
    let mut values: Vec<f64> = m64.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Solves `m x = b` for symmetric positive definite `m` by Cholesky in
/// double precision. `None` when `m` is not positive definite.
pub fn solve_spd<T: Scalar>(m: &DMatrix<T>, b: &[T]) -> Option<Vec<T>> {
    let m64 = m.map(|x| x.to_f64_lossy());
    let b64 = DVector::from_iterator(b.len(), b.iter().map(|x| x.to_f64_lossy()));
    let x = m64.cholesky()?.solve(&b64);
    Some(x.iter().map(|&v| T::lit(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_det() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::new(0.0, 1.0, 1.0, 0.0);
        assert_eq!((a * b).0, [[2.0, 1.0], [4.0, 3.0]]);
        assert_eq!(a.det(), -2.0);
        assert_eq!(a.transpose().0, [[1.0, 3.0], [2.0, 4.0]]);
    }

    #[test]
    fn spectrum_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        assert_eq!(symmetric_spectrum(&m), vec![5.0, 2.0, -1.0]);
    }

    #[test]
    fn spd_solve() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let x = solve_spd(&m, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0_f64).abs() < 1e-15);
        assert!((x[0] + 3.0 * x[1] - 2.0_f64).abs() < 1e-15);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(solve_spd(&indefinite, &[1.0, 1.0]).is_none());
    }
}
