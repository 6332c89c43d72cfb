// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Floating point abstraction shared by all numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the core math is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Total for the implemented types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Shortest decimal rendering that parses back to the same value.
    fn shortest(self) -> String;
}

impl Scalar for f32 {
    fn shortest(self) -> String {
        format!("{self:?}")
    }
}

impl Scalar for f64 {
    fn shortest(self) -> String {
        format!("{self:?}")
    }
}

/// Below this |x| the cancelling trigonometric quotients switch to their
/// power series.
pub(crate) const SERIES_THRESHOLD: f64 = 0.5;

/// Sums `Σ_{n≥0} c_n (−x²)^n` where `c_n` is provided by `coef(n)`, stopping
/// once the terms fall below machine precision relative to the sum.
fn alternating_series<T: Scalar>(x: T, coef: impl Fn(u32) -> f64) -> T {
    let x2 = x * x;
    let mut sum = T::zero();
    let mut power = T::one();
    for n in 0..40 {
        let term = T::lit(coef(n)) * power;
        sum = if n % 2 == 0 { sum + term } else { sum - term };
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.01) {
            break;
        }
        power = power * x2;
    }
    sum
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `sin(x)/x`.
pub(crate) fn sinc<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(SERIES_THRESHOLD) {
        alternating_series(x, |n| 1.0 / factorial(2 * n + 1))
    } else {
        x.sin() / x
    }
}

/// `(x cos x − sin x)/x³`, equal to `−1/3 + x²/30 − …`.
pub(crate) fn cos_sinc_cubic<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(SERIES_THRESHOLD) {
        // Σ_{n≥1} (−1)^n 2n x^{2n−2}/(2n+1)!, reindexed from n = 0.
        -alternating_series(x, |n| {
            let m = n + 1;
            2.0 * f64::from(m) / factorial(2 * m + 1)
        })
    } else {
        (x * x.cos() - x.sin()) / (x * x * x)
    }
}

/// `(2 sin x − 2x cos x − x² sin x)/x³`, equal to `−1/3 + x²/10 − …`.
pub(crate) fn second_sinc_cubic<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(SERIES_THRESHOLD) {
        // Σ_{n≥1} (−1)^n 2n(2n−1) x^{2n−2}/(2n+1)!
        -alternating_series(x, |n| {
            let m = f64::from(n + 1);
            2.0 * m * (2.0 * m - 1.0) / factorial(2 * (n + 1) + 1)
        })
    } else {
        let (s, c) = x.sin_cos();
        (T::lit(2.0) * s - T::lit(2.0) * x * c - x * x * s) / (x * x * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_branches_agree_at_threshold() {
        for &x in &[0.49999_f64, 0.5, 0.50001] {
            let closed = x.sin() / x;
            assert!((sinc(x) - closed).abs() < 1e-15);
            let closed = (x * x.cos() - x.sin()) / x.powi(3);
            assert!((cos_sinc_cubic(x) - closed).abs() < 1e-13);
            let closed = (2.0 * x.sin() - 2.0 * x * x.cos() - x * x * x.sin()) / x.powi(3);
            assert!((second_sinc_cubic(x) - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn series_limits_at_zero() {
        assert_eq!(sinc(0.0_f64), 1.0);
        assert!((cos_sinc_cubic(0.0_f64) + 1.0 / 3.0).abs() < 1e-16);
        assert!((second_sinc_cubic(0.0_f64) + 1.0 / 3.0).abs() < 1e-16);
        assert!(
            (cos_sinc_cubic(1e-3_f64) - (-1.0 / 3.0 + 1e-6 / 30.0 - 1e-12 / 840.0)).abs() < 1e-16
        );
    }

    #[test]
    fn single_precision_series() {
        assert!((sinc(0.3_f32) - 0.3_f32.sin() / 0.3).abs() < 1e-6);
    }

    #[test]
    fn shortest_round_trips() {
        let v = 0.1_f64 + 0.2;
        assert_eq!(v.shortest().parse::<f64>().unwrap(), v);
        assert_eq!(1e-20_f64.shortest(), "1e-20");
    }
}
