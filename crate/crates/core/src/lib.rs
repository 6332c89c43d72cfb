// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact simulation, exact differentiation and landscape navigation for the
//! frequency-controlled quantum harmonic oscillator.
//!
//! A control protocol is a sequence of piecewise-constant trap frequencies.
//! The classical mode function `f(t)` (solving `f'' + ω(t)² f = 0`) is
//! propagated exactly step by step, and the Bogoliubov coefficient `β` of the
//! final state against the target trap gives the infidelity `|β|²`.
//!
//! The math is generic over the floating point type (see [`Scalar`]); the
//! aliases below fix it to `f64`, which is what the CLI and the acceptance
//! suite use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod navigator;
pub mod objectives;
pub mod propagator;
pub mod protocol;
pub mod scalar;
pub mod sensitivities;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double precision protocol.
pub type Protocol = protocol::Protocol<f64>;
/// Single precision protocol.
pub type Protocol32 = protocol::Protocol<f32>;
pub type ModeState = propagator::ModeState<f64>;
pub type BogoliubovPair = propagator::BogoliubovPair<f64>;
pub type SensitivityBundle = sensitivities::SensitivityBundle<f64>;
pub type SymplecticMatrix = objectives::SymplecticMatrix<f64>;

pub type Complex = num_complex::Complex<f64>;
