// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositiveFrequency { name: &'static str, value: f64 },

    #[error("pulse amplitude at index {index} is not finite")]
    NonFiniteEntry { index: usize },

    #[error("refinement factor must be at least 1")]
    InvalidFactor,

    #[error("{pulses} pulses cannot be split into {chunks} equal chunks")]
    IndivisibleChunking { pulses: usize, chunks: usize },

    #[error("occupation number must be non-negative, got {0}")]
    NegativeOccupation(f64),

    #[error("derivatives require at least one pulse")]
    EmptyProtocol,

    #[error("state is not symplectic: det S = {det}")]
    NonSymplectic { det: f64 },

    #[error("expected a protocol with {expected} pulses, got {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("protocol is not a solution: infidelity {infidelity} >= threshold {threshold}")]
    NotASolution { infidelity: f64, threshold: f64 },

    #[error("no solution found after {restarts} restarts (best infidelity {best_infidelity})")]
    RestartBudgetExhausted {
        restarts: usize,
        best_infidelity: f64,
    },

    #[error("corrector could not restore infidelity below {threshold} (reached {infidelity})")]
    CorrectorFailed { infidelity: f64, threshold: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed protocol document: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}
