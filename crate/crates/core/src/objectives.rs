// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Secondary costs on the pulse sequence and the phase-resolved symplectic
//! objective.
//!
//! `C1` penalises jumps between neighbouring pulses; `C2` penalises spread
//! inside each of `L` equal chunks and vanishes exactly when the protocol
//! collapses without loss onto `L` pulses.
//!
//! Phase convention: with `β = 0` the final annihilation operator is
//! `a(T) = α·a(0)` and `θ = arg α`. For a constant trap `ω ≡ ω₀ = ω_T` this is
//! `θ = −ω₀T`, and `S(T) = W(θ)` holds at exactly that `θ`.

use num_complex::Complex;

use crate::linalg::Mat2;
use crate::propagator::{propagate, BogoliubovPair, ModeState};
use crate::protocol::{ChunkView, Protocol};
use crate::{Error, Result, Scalar};

/// Auxiliary cost optimised inside the optimal level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondaryCost {
    /// `C1 = Σ (ω_i − ω_{i−1})²`.
    Smoothness,
    /// `C2 = Σ_chunks Σ_{i>j} (ω_i − ω_j)²` over `chunks` equal chunks.
    Compression { chunks: usize },
}

impl SecondaryCost {
    pub fn value<T: Scalar>(&self, omegas: &[T]) -> Result<T> {
        match *self {
            SecondaryCost::Smoothness => Ok(c1(omegas)),
            SecondaryCost::Compression { chunks } => c2(omegas, chunks),
        }
    }

    pub fn gradient<T: Scalar>(&self, omegas: &[T]) -> Result<Vec<T>> {
        match *self {
            SecondaryCost::Smoothness => Ok(c1_grad(omegas)),
            SecondaryCost::Compression { chunks } => c2_grad(omegas, chunks),
        }
    }

    /// Short label used in CSV headers and diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            SecondaryCost::Smoothness => "C1",
            SecondaryCost::Compression { .. } => "C2",
        }
    }
}

pub fn c1<T: Scalar>(omegas: &[T]) -> T {
    omegas
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum()
}

pub fn c1_grad<T: Scalar>(omegas: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    let mut grad = vec![T::zero(); omegas.len()];
    for (k, w) in omegas.windows(2).enumerate() {
        let jump = two * (w[1] - w[0]);
        grad[k + 1] = grad[k + 1] + jump;
        grad[k] = grad[k] - jump;
    }
    grad
}

fn chunk_mean<T: Scalar>(chunk: &[T]) -> T {
    chunk.iter().copied().sum::<T>() / T::from_usize(chunk.len()).expect("chunk size fits")
}

/// Uses `Σ_{i>j}(x_i − x_j)² = K·Σ(x_i − x̄)²` per chunk.
pub fn c2<T: Scalar>(omegas: &[T], chunks: usize) -> Result<T> {
    let view = ChunkView::new(omegas.len(), chunks)?;
    let k = T::from_usize(view.per_chunk).expect("chunk size fits");
    Ok(omegas
        .chunks(view.per_chunk)
        .map(|c| {
            let mean = chunk_mean(c);
            k * c.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>()
        })
        .sum())
}

/// `∂C2/∂ω_p = 2(K·ω_p − Σ_{q ∈ chunk(p)} ω_q)`.
pub fn c2_grad<T: Scalar>(omegas: &[T], chunks: usize) -> Result<Vec<T>> {
    let view = ChunkView::new(omegas.len(), chunks)?;
    let two_k = T::lit(2.0) * T::from_usize(view.per_chunk).expect("chunk size fits");
    Ok(omegas
        .chunks(view.per_chunk)
        .flat_map(|c| {
            let mean = chunk_mean(c);
            c.iter().map(move |&x| two_k * (x - mean))
        })
        .collect())
}

/// Real 2×2 matrix with unit determinant acting on `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticMatrix<T>(pub Mat2<T>);

impl<T: Scalar> SymplecticMatrix<T> {
    pub fn det(&self) -> T {
        self.0.det()
    }

    pub fn matrix(&self) -> &Mat2<T> {
        &self.0
    }
}

/// Tolerance on `|det S − 1|` before a mode state is rejected.
const SYMPLECTIC_TOLERANCE: f64 = 1e-8;

/// Quadrature propagator built from the mode state:
/// `S = √(ω₀/2)·[[f + f*, i(f − f*)/ω₀], [ḟ + ḟ*, i(ḟ − ḟ*)/ω₀]]`.
pub fn symplectic_final<T: Scalar>(s: &ModeState<T>, omega0: T) -> Result<SymplecticMatrix<T>> {
    if !(omega0 > T::zero()) {
        return Err(Error::NonPositiveFrequency {
            name: "omega0",
            value: omega0.to_f64_lossy(),
        });
    }
    let scale = (omega0 / T::lit(2.0)).sqrt();
    let i_over = Complex::new(T::zero(), T::one() / omega0);
    let entries = [
        s.f + s.f.conj(),
        i_over * (s.f - s.f.conj()),
        s.fdot + s.fdot.conj(),
        i_over * (s.fdot - s.fdot.conj()),
    ];
    debug_assert!(entries
        .iter()
        .all(|z| z.im.abs() <= T::lit(1e-12) * (T::one() + z.re.abs())));
    let [a, b, c, d] = entries.map(|z| z.re * scale);
    let m = SymplecticMatrix(Mat2::new(a, b, c, d));
    let det = m.det();
    if (det - T::one()).abs() > T::lit(SYMPLECTIC_TOLERANCE) {
        return Err(Error::NonSymplectic {
            det: det.to_f64_lossy(),
        });
    }
    Ok(m)
}

/// Target quadrature map for final phase `θ`, evaluated from its complex
/// form `√(ω₀/4ω_T)·e^{iθ}·[[1 + e^{−2iθ}, i(1 − e^{−2iθ})/ω₀],
/// [−iω_T(1 − e^{−2iθ}), (ω_T/ω₀)(1 + e^{−2iθ})]]`.
pub fn target_matrix<T: Scalar>(theta: T, omega0: T, omega_t: T) -> Result<SymplecticMatrix<T>> {
    if !(omega0 > T::zero()) {
        return Err(Error::NonPositiveFrequency {
            name: "omega0",
            value: omega0.to_f64_lossy(),
        });
    }
    if !(omega_t > T::zero()) {
        return Err(Error::NonPositiveFrequency {
            name: "omegaT",
            value: omega_t.to_f64_lossy(),
        });
    }
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let phase = Complex::from_polar(T::one(), theta);
    let back = Complex::from_polar(T::one(), -T::lit(2.0) * theta);
    let pref = phase * (omega0 / (T::lit(4.0) * omega_t)).sqrt();
    let entries = [
        one + back,
        i * (one - back) / omega0,
        -i * (one - back) * omega_t,
        (one + back) * (omega_t / omega0),
    ];
    let [a, b, c, d] = entries.map(|z| (pref * z).re);
    Ok(SymplecticMatrix(Mat2::new(a, b, c, d)))
}

/// Real simplification of [`target_matrix`]:
/// `√(ω₀/ω_T)·[[cos θ, −sin θ/ω₀], [ω_T sin θ, (ω_T/ω₀) cos θ]]`.
pub fn target_matrix_closed_form<T: Scalar>(
    theta: T,
    omega0: T,
    omega_t: T,
) -> SymplecticMatrix<T> {
    let r = (omega0 / omega_t).sqrt();
    let (s, c) = theta.sin_cos();
    SymplecticMatrix(Mat2::new(
        r * c,
        -r * s / omega0,
        r * omega_t * s,
        r * omega_t / omega0 * c,
    ))
}

/// Phase `θ = arg α` of the final Bogoliubov transformation.
pub fn final_phase<T: Scalar>(pair: &BogoliubovPair<T>) -> T {
    pair.alpha.arg()
}

/// `tr[(S(T) − W(θ))(S(T) − W(θ))ᵀ]`.
pub fn theta_infidelity<T: Scalar>(p: &Protocol<T>, theta: T) -> T {
    let s = final_symplectic(p);
    let w = target_matrix(theta, p.omega0(), p.omega_t()).expect("validated protocol");
    s.0.frobenius_distance_sq(&w.0)
}

fn final_symplectic<T: Scalar>(p: &Protocol<T>) -> SymplecticMatrix<T> {
    symplectic_final(&propagate(p), p.omega0()).expect("propagation preserves the Wronskian")
}

/// Default number of grid points for `θ` scans.
pub const DEFAULT_THETA_POINTS: usize = 1024;

/// `(θ_k, I[θ_k])` on the uniform grid `θ_k = 2πk/points`, `k < points`.
pub fn theta_scan<T: Scalar>(p: &Protocol<T>, points: usize) -> Vec<(T, T)> {
    let s = final_symplectic(p);
    let n = T::from_usize(points.max(1)).expect("grid size fits");
    (0..points.max(1))
        .map(|k| {
            let theta = T::TAU() * T::from_usize(k).expect("grid index fits") / n;
            let w = target_matrix(theta, p.omega0(), p.omega_t()).expect("validated protocol");
            (theta, s.0.frobenius_distance_sq(&w.0))
        })
        .collect()
}

/// Minimum of `I[θ]`: best grid point, then golden-section refinement on
/// the bracketing grid cells.
pub fn min_theta_infidelity<T: Scalar>(p: &Protocol<T>, points: usize) -> (T, T) {
    let s = final_symplectic(p);
    let eval = |theta: T| {
        let w = target_matrix(theta, p.omega0(), p.omega_t()).expect("validated protocol");
        s.0.frobenius_distance_sq(&w.0)
    };
    let grid = theta_scan(p, points);
    let (theta0, value0) = grid
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"))
        .expect("non-empty grid");
    let spacing = T::TAU() / T::from_usize(grid.len()).expect("grid size fits");
    let (theta, value) = golden_section(eval, theta0 - spacing, theta0 + spacing);
    if value < value0 {
        (theta.rem_euclid(&T::TAU()), value)
    } else {
        (theta0, value0)
    }
}

trait RemEuclid {
    fn rem_euclid(&self, m: &Self) -> Self;
}

impl<T: Scalar> RemEuclid for T {
    fn rem_euclid(&self, m: &T) -> T {
        let r = *self % *m;
        if r < T::zero() {
            r + *m
        } else {
            r
        }
    }
}

fn golden_section<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= T::epsilon() * T::lit(4.0) * (T::one() + lo.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
