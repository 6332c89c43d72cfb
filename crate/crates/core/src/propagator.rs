// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact evolution of the mode function through piecewise-constant steps.
//!
//! Within a step of constant frequency `ω` the pair `(f, ḟ)` evolves by the
//! real symplectic matrix
//!
//! ```text
//! A(ω) = [[cos ωdt,       sin ωdt / ω],
//!         [−ω sin ωdt,    cos ωdt    ]]
//! ```
//!
//! so the final state is a product of `M` such matrices applied to the
//! ground-state mode of the initial trap. `A` is even in `ω`.

use num_complex::Complex;

use crate::linalg::Mat2;
use crate::protocol::Protocol;
use crate::scalar::sinc;
use crate::{Error, Result, Scalar};

/// Mode function and its time derivative at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState<T> {
    pub f: Complex<T>,
    pub fdot: Complex<T>,
}

/// Bogoliubov coefficients of the final basis relative to the initial one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovPair<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

impl<T: Scalar> BogoliubovPair<T> {
    /// `|α|² − |β|² − 1`, zero for a canonical transformation.
    pub fn unitarity_defect(&self) -> T {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - T::one()
    }
}

impl<T: Scalar> ModeState<T> {
    pub fn new(f: Complex<T>, fdot: Complex<T>) -> Self {
        ModeState { f, fdot }
    }

    pub fn evolve(&self, step: &Mat2<T>) -> Self {
        let (f, fdot) = step.apply(self.f, self.fdot);
        ModeState { f, fdot }
    }
}

/// Ground-state mode of a trap of frequency `omega0`:
/// `f = 1/√(2ω₀)`, `ḟ = −i√(ω₀/2)`.
pub fn initial_state<T: Scalar>(omega0: T) -> Result<ModeState<T>> {
    if !(omega0 > T::zero()) {
        return Err(Error::NonPositiveFrequency {
            name: "omega0",
            value: omega0.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    Ok(ModeState {
        f: Complex::new((T::one() / (two * omega0)).sqrt(), T::zero()),
        fdot: Complex::new(T::zero(), -(omega0 / two).sqrt()),
    })
}

/// Exact one-step propagator for frequency `omega` held for `dt`.
pub fn step_matrix<T: Scalar>(omega: T, dt: T) -> Mat2<T> {
    let x = omega * dt;
    let c = x.cos();
    let sc = sinc(x);
    // sin(ωdt)/ω = dt·sinc(x) and ω·sin(ωdt) = ω²dt·sinc(x), finite at ω = 0.
    Mat2::new(c, dt * sc, -omega * omega * dt * sc, c)
}

/// Final mode state `A(ω_M)·…·A(ω_1)·(f₀, ḟ₀)`.
pub fn propagate<T: Scalar>(p: &Protocol<T>) -> ModeState<T> {
    let start = initial_state(p.omega0()).expect("validated protocol");
    p.omegas()
        .iter()
        .fold(start, |s, &w| s.evolve(&step_matrix(w, p.dt())))
}

/// Mode states after each step, `states[0]` being the initial state.
pub fn trajectory<T: Scalar>(p: &Protocol<T>) -> Vec<ModeState<T>> {
    let mut states = Vec::with_capacity(p.len() + 1);
    let mut s = initial_state(p.omega0()).expect("validated protocol");
    states.push(s);
    for &w in p.omegas() {
        s = s.evolve(&step_matrix(w, p.dt()));
        states.push(s);
    }
    states
}

/// Normalisation shared by `β`, `α` and their derivatives: `i/√(2ω_T)`.
pub(crate) fn beta_prefactor<T: Scalar>(omega_t: T) -> Complex<T> {
    Complex::new(T::zero(), T::one() / (T::lit(2.0) * omega_t).sqrt())
}

/// `β` as a linear functional of a (possibly differentiated) final state:
/// `−(i/√(2ω_T))·[ḟ + iω_T f]`.
#[inline]
pub(crate) fn beta_of<T: Scalar>(f: Complex<T>, fdot: Complex<T>, omega_t: T) -> Complex<T> {
    -beta_prefactor(omega_t) * (fdot + Complex::new(T::zero(), omega_t) * f)
}

pub fn bogoliubov<T: Scalar>(s: &ModeState<T>, omega_t: T) -> Result<BogoliubovPair<T>> {
    if !(omega_t > T::zero()) {
        return Err(Error::NonPositiveFrequency {
            name: "omegaT",
            value: omega_t.to_f64_lossy(),
        });
    }
    let iw = Complex::new(T::zero(), omega_t);
    Ok(BogoliubovPair {
        alpha: beta_prefactor(omega_t) * (s.fdot - iw * s.f),
        beta: beta_of(s.f, s.fdot, omega_t),
    })
}

/// Final Bogoliubov pair of a protocol.
pub fn final_bogoliubov<T: Scalar>(p: &Protocol<T>) -> BogoliubovPair<T> {
    bogoliubov(&propagate(p), p.omega_t()).expect("validated protocol")
}

/// Infidelity `|β|²`.
pub fn infidelity<T: Scalar>(p: &Protocol<T>) -> T {
    final_bogoliubov(p).beta.norm_sqr()
}

/// Final mean occupation `N(0)(1 + 2|β|²) + |β|²`.
pub fn particle_number<T: Scalar>(n0: T, beta: Complex<T>) -> Result<T> {
    if !(n0 >= T::zero()) {
        return Err(Error::NegativeOccupation(n0.to_f64_lossy()));
    }
    let b2 = beta.norm_sqr();
    Ok(n0 * (T::one() + T::lit(2.0) * b2) + b2)
}

/// `|f·ḟ* − ḟ·f* − i|`.
pub fn wronskian_defect<T: Scalar>(s: &ModeState<T>) -> T {
    let w = s.f * s.fdot.conj() - s.fdot * s.f.conj();
    (w - Complex::i()).norm()
}
