// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Projection onto the null space of the optimal Hessian `2 Re[∇β ⊗ ∇β*]`,
//! i.e. the orthogonal complement of `span{Re ∇β, Im ∇β}`.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::linalg::{dot, norm};
use crate::Scalar;

/// Default relative cutoff below which a spanning direction is dropped.
pub const DEFAULT_NULL_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of `span{Re ∇β, Im ∇β}` (zero, one or two vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBasis<T> {
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> CurvatureBasis<T> {
    /// Stabilised Gram–Schmidt; a direction is kept only if its norm after
    /// orthogonalisation exceeds `tolerance` times the larger input norm.
    pub fn new(grad_beta: &[Complex<T>], tolerance: T) -> Self {
        let re: Vec<T> = grad_beta.iter().map(|z| z.re).collect();
        let im: Vec<T> = grad_beta.iter().map(|z| z.im).collect();
        let scale = norm(&re).max(norm(&im));
        let mut vectors: Vec<Vec<T>> = Vec::with_capacity(2);
        if scale == T::zero() {
            return CurvatureBasis { vectors };
        }
        for mut v in [re, im] {
            // Two passes of classical Gram–Schmidt.
            for _ in 0..2 {
                for q in &vectors {
                    let c = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(x, &qi)| *x = *x - c * qi);
                }
            }
            let n = norm(&v);
            if n > tolerance * scale {
                v.iter_mut().for_each(|x| *x = *x / n);
                vectors.push(v);
            }
        }
        CurvatureBasis { vectors }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// `P·v = v − Σ q (q·v)`, without forming `P`.
    pub fn project(&self, v: &[T]) -> Vec<T> {
        let mut out = v.to_vec();
        for q in &self.vectors {
            let c = dot(q, v);
            out.iter_mut().zip(q).for_each(|(x, &qi)| *x = *x - c * qi);
        }
        out
    }

    /// Dense `P = I − Q·Qᵀ`.
    pub fn projector(&self, dim: usize) -> DMatrix<T> {
        DMatrix::from_fn(dim, dim, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            id - self.vectors.iter().map(|q| q[i] * q[j]).sum::<T>()
        })
    }
}

/// Null-space projector of the optimal Hessian at the default tolerance.
pub fn null_projector<T: Scalar>(grad_beta: &[Complex<T>]) -> DMatrix<T> {
    CurvatureBasis::new(grad_beta, T::lit(DEFAULT_NULL_TOLERANCE)).projector(grad_beta.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(p: &DMatrix<f64>) -> f64 {
        p.diagonal().iter().sum()
    }

    #[test]
    fn zero_gradient_gives_identity() {
        let g = vec![Complex::new(0.0, 0.0); 5];
        assert_eq!(null_projector(&g), DMatrix::identity(5, 5));
    }

    #[test]
    fn real_gradient_removes_one_direction() {
        let g: Vec<_> = [1.0, 2.0, -0.5, 0.1]
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        let p = null_projector(&g);
        assert!((trace(&p) - 3.0).abs() < 1e-12);
        // Collinear imaginary part does not add a direction.
        let g: Vec<_> = [1.0, 2.0, -0.5, 0.1]
            .iter()
            .map(|&x| Complex::new(x, -3.0 * x))
            .collect();
        assert!((trace(&null_projector(&g)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn generic_gradient_projector_identities() {
        let g: Vec<_> = (0..9)
            .map(|i| Complex::new((0.7 * i as f64).sin(), (1.3 * i as f64 + 0.2).cos()))
            .collect();
        let p = null_projector(&g);
        assert!((trace(&p) - 7.0).abs() < 1e-12);
        let p2 = &p * &p;
        assert!((p2 - &p).amax() < 1e-14);
        assert!((&p - p.transpose()).amax() < 1e-15);
        let re = nalgebra::DVector::from_iterator(9, g.iter().map(|z| z.re));
        let im = nalgebra::DVector::from_iterator(9, g.iter().map(|z| z.im));
        assert!((&p * re).amax() < 1e-14);
        assert!((&p * im).amax() < 1e-14);
        let basis = CurvatureBasis::new(&g, 1e-10);
        let v: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
        let dense = &p * nalgebra::DVector::from_vec(v.clone());
        for (a, b) in basis.project(&v).iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
