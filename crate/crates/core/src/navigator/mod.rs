// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Searching and moving through the infidelity landscape.
//!
//! * [`descend`] / [`solve`]: gradient descent on `|β|²` from random fields,
//!   restarting until a solution is found.
//! * [`navigate`]: secondary-cost descent projected onto the null space of
//!   the optimal Hessian, with a corrector that pulls the iterate back onto
//!   the solution set and an optional refinement schedule.
//! * [`trace_levelset`] / [`scan_levelset`]: continuation along the
//!   one-dimensional solution curves of three-pulse protocols.

mod descent;
mod levelset;
mod navigate;
mod projector;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::protocol::Protocol;
use crate::{Error, Result, Scalar};

pub use descent::{descend, gauss_newton_step, solve, Descent, Solution};
pub use levelset::{
    scan_levelset, trace_levelset, CloudPoint, ContinuationConfig, LevelsetCloud, LevelsetCurve,
    Termination,
};
pub use navigate::{navigate, Navigation, NavigationStatus};
pub use projector::{null_projector, CurvatureBasis, DEFAULT_NULL_TOLERANCE};

/// Boundary data of a control task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub omega0: f64,
    #[serde(rename = "omegaT")]
    pub omega_t: f64,
    #[serde(rename = "T")]
    pub duration: f64,
}

impl Task {
    /// Expansion stroke `ω(0) = 1 → ω(T) = 0.25` in `T = 1.8`.
    pub const EXPANSION: Task = Task {
        omega0: 1.0,
        omega_t: 0.25,
        duration: 1.8,
    };

    pub fn protocol<T: Scalar>(&self, omegas: Vec<T>) -> Result<Protocol<T>> {
        Protocol::with_duration(
            T::lit(self.omega0),
            T::lit(self.omega_t),
            T::lit(self.duration),
            omegas,
        )
    }
}

/// Backtracking line search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepRule {
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    /// Factor applied to the last accepted step to get the next first trial.
    pub growth: f64,
    pub min_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial_step: 0.1,
            shrink: 0.5,
            armijo: 1e-4,
            growth: 2.0,
            min_step: 1e-14,
        }
    }
}

impl StepRule {
    /// Armijo test with strict decrease. Fails once the required decrease is
    /// below the rounding level of `value`.
    pub(crate) fn sufficient<T: Scalar>(&self, value: T, trial: T, t: T, slope: T) -> bool {
        let required = T::lit(self.armijo) * t * slope;
        let resolvable = -required > T::epsilon() * value.abs();
        resolvable && trial < value && trial <= value + required
    }

    fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.growth >= 1.0
            && self.min_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid step rule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentConfig {
    pub max_iterations: usize,
    /// Stop once `max_i |∂I/∂ω_i|` drops below this.
    pub grad_tolerance: f64,
    /// `I_th`: critical points above it are traps.
    pub infidelity_threshold: f64,
    pub step: StepRule,
    /// Random initial pulses are drawn uniformly from `[omega_lo, omega_hi)`.
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub seed: u64,
    pub max_restarts: usize,
    /// Once below `I_th`, switch to minimum-norm Gauss–Newton steps on `β`
    /// so the solution is driven to round-off level.
    pub polish: bool,
    /// While polishing, keep iterating past `grad_tolerance` until the
    /// infidelity drops below this or stops improving.
    pub polish_tolerance: f64,
    /// Keep every n-th iterate in the trajectory (first and last are always kept).
    pub record_every: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            max_iterations: 20_000,
            grad_tolerance: 1e-10,
            infidelity_threshold: 1e-5,
            step: StepRule::default(),
            omega_lo: 0.1,
            omega_hi: 2.0,
            seed: 0,
            max_restarts: 100,
            polish: true,
            polish_tolerance: 1e-26,
            record_every: 1,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !(self.omega_lo < self.omega_hi) {
            return Err(Error::InvalidConfig(
                "omega_lo must be below omega_hi".into(),
            ));
        }
        if !(self.grad_tolerance > 0.0) || !(self.infidelity_threshold > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigationConfig {
    pub max_iterations: usize,
    pub step: StepRule,
    /// Relative cutoff for dropping a curvature direction from the projector.
    pub null_tolerance: f64,
    pub infidelity_threshold: f64,
    /// Run the corrector when a trial point exceeds this.
    pub corrector_trigger: f64,
    /// Corrector stops below this.
    pub corrector_target: f64,
    pub corrector_budget: usize,
    /// Refinement factors applied, in order, each time navigation stalls.
    pub doubling: Vec<usize>,
    /// Navigation stalls when `max_i |(P∇C)_i|` drops below this.
    pub stall_tolerance: f64,
    pub record_every: usize,
}

impl Default for NavigationConfig {
    fn default() -> Self {
        NavigationConfig {
            max_iterations: 400_000,
            step: StepRule::default(),
            null_tolerance: DEFAULT_NULL_TOLERANCE,
            infidelity_threshold: 1e-5,
            // Iterates are kept on the exact solution set: a correction from
            // I ~ I_th/10 moves the point by O(|β|/|∇β|), which can undo the
            // secondary-cost decrease of small predictor steps.
            corrector_trigger: 1e-14,
            corrector_target: 1e-24,
            corrector_budget: 20,
            doubling: Vec::new(),
            stall_tolerance: 1e-8,
            record_every: 100,
        }
    }
}

impl NavigationConfig {
    pub fn trigger(&self) -> f64 {
        self.corrector_trigger
    }

    pub fn target(&self) -> f64 {
        self.corrector_target
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !(self.trigger() < self.infidelity_threshold) {
            return Err(Error::InvalidConfig(
                "corrector trigger must be below the infidelity threshold".into(),
            ));
        }
        if !(self.target() <= self.trigger()) {
            return Err(Error::InvalidConfig(
                "corrector target must not exceed the trigger".into(),
            ));
        }
        if self.doubling.contains(&0) {
            return Err(Error::InvalidConfig(
                "refinement factors must be at least 1".into(),
            ));
        }
        if !(self.stall_tolerance > 0.0) || !(self.null_tolerance > 0.0) || self.record_every == 0 {
            return Err(Error::InvalidConfig(
                "tolerances and record interval must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One sampled iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub iteration: usize,
    pub infidelity: f64,
    /// Objective being descended: `I` for primary descents, `C1`/`C2` for
    /// navigation.
    pub cost: f64,
    /// Max-norm of the (projected) gradient of that objective.
    pub pgrad_norm: f64,
    pub omegas: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrajectory<T> {
    pub records: Vec<TrajectoryRecord<T>>,
    /// Largest infidelity over every accepted iterate, recorded or not.
    pub max_infidelity: f64,
    pub accepted_steps: usize,
    /// `(iteration, new pulse count)` for each refinement.
    pub refinements: Vec<(usize, usize)>,
}

impl<T: Scalar> Default for DescentTrajectory<T> {
    fn default() -> Self {
        DescentTrajectory {
            records: Vec::new(),
            max_infidelity: 0.0,
            accepted_steps: 0,
            refinements: Vec::new(),
        }
    }
}

impl<T: Scalar> DescentTrajectory<T> {
    /// Appends a record; a second record for the same iteration replaces
    /// the first.
    pub(crate) fn push(&mut self, record: TrajectoryRecord<T>) {
        self.max_infidelity = self.max_infidelity.max(record.infidelity);
        if let Some(last) = self.records.last_mut() {
            if last.iteration == record.iteration {
                *last = record;
                return;
            }
        }
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TrajectoryRecord<T>> {
        self.records.last()
    }

    /// CSV with header `iter,I,cost,pgrad_norm,omega_1,...,omega_M`. When the
    /// pulse count changes along the run, `M` is the largest one and shorter
    /// rows leave the trailing fields empty.
    pub fn to_csv(&self) -> String {
        let width = self
            .records
            .iter()
            .map(|r| r.omegas.len())
            .max()
            .unwrap_or(0);
        let mut out = String::from("iter,I,cost,pgrad_norm");
        for i in 1..=width {
            let _ = write!(out, ",omega_{i}");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{}",
                r.iteration,
                r.infidelity.shortest(),
                r.cost.shortest(),
                r.pgrad_norm.shortest()
            );
            for w in &r.omegas {
                let _ = write!(out, ",{}", w.shortest());
            }
            for _ in r.omegas.len()..width {
                out.push(',');
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Solution,
    Trap,
    NonCritical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub classification: Classification,
    pub infidelity: f64,
    pub gradient_norm: f64,
    /// Eigenvalues of the full infidelity Hessian, descending.
    pub spectrum: Vec<f64>,
}

impl CriticalPointReport {
    pub fn classify(infidelity: f64, gradient_norm: f64, cfg: &DescentConfig) -> Classification {
        if gradient_norm >= cfg.grad_tolerance {
            Classification::NonCritical
        } else if infidelity < cfg.infidelity_threshold {
            Classification::Solution
        } else {
            Classification::Trap
        }
    }
}
