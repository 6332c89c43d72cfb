// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact first and second derivatives of `β` and of the infidelity with
//! respect to the pulse amplitudes.
//!
//! The final state depends on `ω_j` only through the state entering step
//! `j`, so the derivative rows obey the same step recursion as the state
//! itself. One forward sweep carries, for every `j ≤ i`,
//!
//! ```text
//! v_j ← A(ω_i)·v_j            (j < i)
//! v_i  = A′(ω_i)·s_{i−1}
//! ```
//!
//! and for the Hessian the pair tableau `w_jk`, `j ≤ k ≤ i`:
//!
//! ```text
//! w_jk ← A(ω_i)·w_jk          (k < i)
//! w_ji  = A′(ω_i)·v_j         (j < i)
//! w_ii  = A″(ω_i)·s_{i−1}
//! ```
//!
//! `β` is linear in the final state, so its derivatives are the same linear
//! functional applied to the final rows.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::linalg::Mat2;
use crate::propagator::{beta_of, final_bogoliubov, initial_state, step_matrix, ModeState};
use crate::protocol::Protocol;
use crate::scalar::{cos_sinc_cubic, second_sinc_cubic};
use crate::{Error, Result, Scalar};

/// `dA/dω` for one step.
pub fn step_matrix_d1<T: Scalar>(omega: T, dt: T) -> Mat2<T> {
    let x = omega * dt;
    let (s, c) = x.sin_cos();
    // (ωdt·cos ωdt − sin ωdt)/ω² = dt²·x·p(x) with p(x) = (x cos x − sin x)/x³.
    Mat2::new(
        -dt * s,
        dt * dt * x * cos_sinc_cubic(x),
        -s - x * c,
        -dt * s,
    )
}

/// `d²A/dω²` for one step.
pub fn step_matrix_d2<T: Scalar>(omega: T, dt: T) -> Mat2<T> {
    let x = omega * dt;
    let (s, c) = x.sin_cos();
    let two = T::lit(2.0);
    Mat2::new(
        -dt * dt * c,
        dt * dt * dt * second_sinc_cubic(x),
        dt * (x * s - two * c),
        -dt * dt * c,
    )
}

/// Exact derivatives at one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityBundle<T: Scalar> {
    pub beta: Complex<T>,
    pub infidelity: T,
    /// `∂β/∂ω_i`.
    pub grad_beta: Vec<Complex<T>>,
    /// `∂I/∂ω_i = 2 Re[∂β/∂ω_i · β*]`.
    pub grad_infidelity: Vec<T>,
    /// `∂²β/∂ω_i∂ω_j`, present after [`hessian`].
    pub hess_beta: Option<DMatrix<Complex<T>>>,
    /// `∂²I/∂ω_i∂ω_j`, present after [`hessian`].
    pub hess_infidelity: Option<DMatrix<T>>,
}

impl<T: Scalar> SensitivityBundle<T> {
    pub fn len(&self) -> usize {
        self.grad_beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_beta.is_empty()
    }

    /// Real and imaginary parts of `∇β` as separate real vectors.
    pub fn grad_beta_parts(&self) -> (Vec<T>, Vec<T>) {
        self.grad_beta.iter().map(|z| (z.re, z.im)).unzip()
    }
}

fn first_order<T: Scalar>(p: &Protocol<T>) -> Result<(Complex<T>, Vec<Complex<T>>)> {
    if p.is_empty() {
        return Err(Error::EmptyProtocol);
    }
    let dt = p.dt();
    let mut state = initial_state(p.omega0())?;
    let mut rows: Vec<ModeState<T>> = Vec::with_capacity(p.len());
    for &w in p.omegas() {
        let a = step_matrix(w, dt);
        for row in rows.iter_mut() {
            *row = row.evolve(&a);
        }
        rows.push(state.evolve(&step_matrix_d1(w, dt)));
        state = state.evolve(&a);
    }
    let wt = p.omega_t();
    let beta = beta_of(state.f, state.fdot, wt);
    let grad = rows.iter().map(|r| beta_of(r.f, r.fdot, wt)).collect();
    Ok((beta, grad))
}

fn assemble<T: Scalar>(beta: Complex<T>, grad_beta: Vec<Complex<T>>) -> SensitivityBundle<T> {
    let two = T::lit(2.0);
    let grad_infidelity = grad_beta
        .iter()
        .map(|g| two * (g * beta.conj()).re)
        .collect();
    SensitivityBundle {
        beta,
        infidelity: beta.norm_sqr(),
        grad_beta,
        grad_infidelity,
        hess_beta: None,
        hess_infidelity: None,
    }
}

/// `β`, `∇β` and `∇I` in one forward sweep, `O(M²)`.
pub fn gradient<T: Scalar>(p: &Protocol<T>) -> Result<SensitivityBundle<T>> {
    let (beta, grad) = first_order(p)?;
    Ok(assemble(beta, grad))
}

#[inline]
fn packed(j: usize, k: usize) -> usize {
    debug_assert!(j <= k);
    k * (k + 1) / 2 + j
}

/// All first- and second-order fields, `O(M³)`.
pub fn hessian<T: Scalar>(p: &Protocol<T>) -> Result<SensitivityBundle<T>> {
    if p.is_empty() {
        return Err(Error::EmptyProtocol);
    }
    let m = p.len();
    let dt = p.dt();
    let mut state = initial_state(p.omega0())?;
    let mut rows: Vec<ModeState<T>> = Vec::with_capacity(m);
    let mut pairs: Vec<ModeState<T>> = Vec::with_capacity(m * (m + 1) / 2);
    for (i, &w) in p.omegas().iter().enumerate() {
        let a = step_matrix(w, dt);
        let d1 = step_matrix_d1(w, dt);
        for entry in pairs.iter_mut() {
            *entry = entry.evolve(&a);
        }
        // Column k = i of the packed tableau, built from the rows before
        // they are advanced through step i.
        for row in rows.iter() {
            pairs.push(row.evolve(&d1));
        }
        pairs.push(state.evolve(&step_matrix_d2(w, dt)));
        debug_assert_eq!(pairs.len(), packed(i, i) + 1);
        for row in rows.iter_mut() {
            *row = row.evolve(&a);
        }
        rows.push(state.evolve(&d1));
        state = state.evolve(&a);
    }

    let wt = p.omega_t();
    let beta = beta_of(state.f, state.fdot, wt);
    let grad: Vec<Complex<T>> = rows.iter().map(|r| beta_of(r.f, r.fdot, wt)).collect();
    let hess_beta = DMatrix::from_fn(m, m, |j, k| {
        let e = pairs[packed(j.min(k), j.max(k))];
        beta_of(e.f, e.fdot, wt)
    });
    let two = T::lit(2.0);
    let raw =
        |j: usize, k: usize| two * (grad[j] * grad[k].conj() + hess_beta[(j, k)] * beta.conj()).re;
    // The two cross terms are conjugates of each other, so only rounding
    // separates (j, k) from (k, j).
    let hess_infidelity = DMatrix::from_fn(m, m, |j, k| (raw(j, k) + raw(k, j)) * T::lit(0.5));

    let mut bundle = assemble(beta, grad);
    bundle.hess_beta = Some(hess_beta);
    bundle.hess_infidelity = Some(hess_infidelity);
    Ok(bundle)
}

/// `2 Re[∇β ⊗ ∇β*]`, the infidelity Hessian at an exact solution. Rank ≤ 2.
pub fn optimal_hessian<T: Scalar>(grad_beta: &[Complex<T>]) -> DMatrix<T> {
    let m = grad_beta.len();
    let two = T::lit(2.0);
    DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (grad_beta[i], grad_beta[j]);
        two * (a.re * b.re + a.im * b.im)
    })
}

/// Central finite differences of `β` and `I`, independent of the sweeps
/// above. Intended as a test oracle.
pub mod finite_difference {
    use super::*;
    use crate::propagator::infidelity;

    /// Default step for first derivatives.
    pub const GRADIENT_STEP: f64 = 1e-6;
    /// Default step for second derivatives.
    pub const HESSIAN_STEP: f64 = 1e-4;

    #[derive(Debug, Clone)]
    pub struct FdGradient<T> {
        pub beta: Vec<Complex<T>>,
        pub infidelity: Vec<T>,
    }

    fn shifted<T: Scalar>(p: &Protocol<T>, shifts: &[(usize, T)]) -> Protocol<T> {
        let mut omegas = p.omegas().to_vec();
        for &(i, h) in shifts {
            omegas[i] = omegas[i] + h;
        }
        p.with_omegas(omegas).expect("finite shift")
    }

    fn beta<T: Scalar>(p: &Protocol<T>) -> Complex<T> {
        final_bogoliubov(p).beta
    }

    pub fn fd_gradient<T: Scalar>(p: &Protocol<T>, h: T) -> FdGradient<T> {
        let two_h = T::lit(2.0) * h;
        let mut out = FdGradient {
            beta: Vec::with_capacity(p.len()),
            infidelity: Vec::with_capacity(p.len()),
        };
        for i in 0..p.len() {
            let plus = shifted(p, &[(i, h)]);
            let minus = shifted(p, &[(i, -h)]);
            out.beta.push((beta(&plus) - beta(&minus)) / two_h);
            out.infidelity
                .push((infidelity(&plus) - infidelity(&minus)) / two_h);
        }
        out
    }

    fn second_differences<T: Scalar, V>(
        p: &Protocol<T>,
        h: T,
        eval: impl Fn(&Protocol<T>) -> V,
    ) -> DMatrix<V>
    where
        V: Copy
            + std::ops::Add<Output = V>
            + std::ops::Sub<Output = V>
            + std::ops::Div<T, Output = V>
            + std::ops::Mul<T, Output = V>
            + PartialEq
            + std::fmt::Debug
            + 'static,
    {
        let m = p.len();
        let center = eval(p);
        let mut out = DMatrix::from_element(m, m, center);
        let h2 = h * h;
        for i in 0..m {
            let plus = eval(&shifted(p, &[(i, h)]));
            let minus = eval(&shifted(p, &[(i, -h)]));
            out[(i, i)] = (plus + minus - center * T::lit(2.0)) / h2;
            for j in 0..i {
                let pp = eval(&shifted(p, &[(i, h), (j, h)]));
                let pm = eval(&shifted(p, &[(i, h), (j, -h)]));
                let mp = eval(&shifted(p, &[(i, -h), (j, h)]));
                let mm = eval(&shifted(p, &[(i, -h), (j, -h)]));
                let v = (pp - pm - mp + mm) / (T::lit(4.0) * h2);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Second differences of the infidelity.
    pub fn fd_hessian<T: Scalar>(p: &Protocol<T>, h: T) -> DMatrix<T> {
        second_differences(p, h, infidelity)
    }

    /// Second differences of `β`.
    pub fn fd_hessian_beta<T: Scalar>(p: &Protocol<T>, h: T) -> DMatrix<Complex<T>> {
        second_differences(p, h, beta)
    }
}

#[cfg(test)]
mod tests {
    use super::finite_difference::*;
    use super::*;
    use crate::linalg::max_abs;
    use crate::propagator::step_matrix;

    fn fd_matrix(f: impl Fn(f64) -> Mat2<f64>, w: f64, h: f64) -> Mat2<f64> {
        let (a, b) = (f(w + h), f(w - h));
        let d = |i: usize, j: usize| (a.0[i][j] - b.0[i][j]) / (2.0 * h);
        Mat2::new(d(0, 0), d(0, 1), d(1, 0), d(1, 1))
    }

    #[test]
    fn first_derivative_of_step_matrix() {
        // Derivative of an even function vanishes at the origin.
        assert_eq!(step_matrix_d1(0.0, 0.5).0, [[0.0, 0.0], [0.0, 0.0]]);
        let d = step_matrix_d1(0.5_f64, 1.8);
        assert!((d.0[1][0] - (-1.342_775_881_071_081_5)).abs() < 1e-15);
        for &(w, dt) in &[(0.5, 1.8), (1e-3, 0.3), (0.3, 1.0), (4.0, 0.1), (-2.0, 0.7)] {
            let fd = fd_matrix(|x| step_matrix(x, dt), w, 1e-6);
            assert!(step_matrix_d1(w, dt).max_abs_diff(&fd) < 1e-8, "w={w}");
            assert_eq!(step_matrix_d1(-w, dt).0, {
                let m = step_matrix_d1(w, dt).0;
                [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
            });
        }
    }

    #[test]
    fn second_derivative_of_step_matrix() {
        let d = step_matrix_d2(0.0_f64, 0.5);
        assert_eq!(d.0[0][0], -0.25);
        assert!((d.0[0][1] + 0.125 / 3.0).abs() < 1e-16);
        assert_eq!(d.0[1][0], -1.0);
        for &(w, dt) in &[
            (0.5, 1.8),
            (1e-3, 0.3),
            (0.49, 1.0),
            (0.51, 1.0),
            (-3.0, 0.4),
        ] {
            let fd = fd_matrix(|x| step_matrix_d1(x, dt), w, 1e-6);
            assert!(step_matrix_d2(w, dt).max_abs_diff(&fd) < 1e-8, "w={w}");
            assert_eq!(step_matrix_d2(-w, dt), step_matrix_d2(w, dt));
        }
        // Second central differences of A itself, h = 1e-4.
        let (w, dt, h) = (0.5_f64, 1.8, 1e-4);
        let (p, c, m) = (
            step_matrix(w + h, dt),
            step_matrix(w, dt),
            step_matrix(w - h, dt),
        );
        let exact = step_matrix_d2(w, dt);
        for i in 0..2 {
            for j in 0..2 {
                let fd = (p.0[i][j] - 2.0 * c.0[i][j] + m.0[i][j]) / (h * h);
                assert!(((exact.0[i][j] - fd) / exact.0[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_protocol_has_no_derivatives() {
        let p = Protocol::new(1.0, 0.25, 1.0, vec![]).unwrap();
        assert_eq!(gradient(&p), Err(Error::EmptyProtocol));
        assert_eq!(hessian(&p), Err(Error::EmptyProtocol));
    }

    #[test]
    fn gradient_vanishes_at_resonant_protocol() {
        let p = Protocol::new(1.0, 1.0, 0.2, vec![1.0; 9]).unwrap();
        let b = gradient(&p).unwrap();
        assert!(max_abs(&b.grad_infidelity) < 1e-15);
        assert!(max_abs(&fd_gradient(&p, 1e-6).infidelity) < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Protocol::new(
            1.0_f64,
            0.25,
            0.15,
            vec![0.3, 1.7, 0.9, 1.1, 0.2, 1.4, 0.6, 1.9],
        )
        .unwrap();
        let b = gradient(&p).unwrap();
        let fd = fd_gradient(&p, 1e-6);
        let scale = max_abs(&fd.infidelity);
        for (a, e) in b.grad_infidelity.iter().zip(&fd.infidelity) {
            assert!((a - e).abs() < 1e-7 * scale);
        }
        for (a, e) in b.grad_beta.iter().zip(&fd.beta) {
            assert!((a - e).norm() < 1e-8);
        }
    }

    #[test]
    fn sign_flip_negates_one_component() {
        let omegas = vec![0.3, 1.7, 0.9, 1.1];
        let p = Protocol::new(1.0, 0.25, 0.4, omegas.clone()).unwrap();
        let mut flipped = omegas;
        flipped[2] = -flipped[2];
        let q = p.with_omegas(flipped).unwrap();
        let (a, b) = (gradient(&p).unwrap(), gradient(&q).unwrap());
        for i in 0..4 {
            let expect = if i == 2 {
                -a.grad_beta[i]
            } else {
                a.grad_beta[i]
            };
            assert!((b.grad_beta[i] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn hessian_first_order_fields_match_gradient() {
        let p = Protocol::new(1.0, 0.25, 0.3, vec![0.4, 1.3, 0.8, 1.6, 0.1]).unwrap();
        let g = gradient(&p).unwrap();
        let h = hessian(&p).unwrap();
        assert_eq!(g.beta, h.beta);
        for (a, b) in g.grad_beta.iter().zip(&h.grad_beta) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn two_pulse_hessian_matches_second_differences() {
        let p = Protocol::new(1.0_f64, 0.25, 0.9, vec![0.7, 1.6]).unwrap();
        let h = hessian(&p).unwrap();
        let hi = h.hess_infidelity.unwrap();
        let fd = fd_hessian(&p, 1e-4);
        for (j, k) in [(0, 0), (0, 1), (1, 1)] {
            let rel = ((hi[(j, k)] - fd[(j, k)]) / fd[(j, k)]).abs();
            assert!(rel < 1e-4, "({j},{k}) rel {rel}");
        }
        let hb = h.hess_beta.unwrap();
        let fdb = fd_hessian_beta(&p, 1e-4);
        for (a, e) in hb.iter().zip(fdb.iter()) {
            assert!((a - e).norm() < 1e-6);
        }
    }

    #[test]
    fn optimal_hessian_rank() {
        use crate::linalg::symmetric_spectrum;
        let zero = vec![Complex::new(0.0, 0.0); 4];
        assert!(optimal_hessian(&zero).iter().all(|&x| x == 0.0));
        let real: Vec<_> = [1.0, -2.0, 0.5, 3.0]
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        let ev = symmetric_spectrum(&optimal_hessian(&real));
        assert!(ev[1].abs() < 1e-12 * ev[0]);
        let cplx: Vec<_> = (0..6)
            .map(|i| Complex::new((i as f64).sin(), (2.0 * i as f64).cos()))
            .collect();
        let h = optimal_hessian(&cplx);
        assert_eq!(h, h.transpose());
        let ev = symmetric_spectrum(&h);
        assert!(ev[1] > 1e-3 * ev[0]);
        assert!(ev[2].abs() < 1e-12 * ev[0]);
    }
}
