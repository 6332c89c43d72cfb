// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use super::descent::{correct, offset};
use super::projector::CurvatureBasis;
use super::{DescentTrajectory, NavigationConfig, TrajectoryRecord};
use crate::linalg::{dot, max_abs};
use crate::objectives::SecondaryCost;
use crate::propagator::infidelity;
use crate::protocol::Protocol;
use crate::sensitivities::gradient;
use crate::{Error, Result, Scalar};

/// Why navigation stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavigationStatus {
    /// Projected gradient below the stall tolerance with the refinement
    /// schedule exhausted.
    Converged,
    /// No acceptable step could be found, schedule exhausted.
    LineSearchStalled,
    IterationBudget,
    /// The corrector could not bring a trial point back below the trigger.
    CorrectorFailed {
        infidelity: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Navigation<T: Scalar> {
    /// Last accepted protocol (always a solution).
    pub protocol: Protocol<T>,
    pub trajectory: DescentTrajectory<T>,
    pub status: NavigationStatus,
    pub initial_cost: f64,
    pub final_cost: f64,
}

impl<T: Scalar> Navigation<T> {
    /// Turns a corrector failure into an error, keeping the data otherwise.
    pub fn into_result(self, cfg: &NavigationConfig) -> Result<Self> {
        match self.status {
            NavigationStatus::CorrectorFailed { infidelity } => Err(Error::CorrectorFailed {
                infidelity,
                threshold: cfg.trigger(),
            }),
            _ => Ok(self),
        }
    }
}

/// Predictor step of length `t` along `dir`, then the corrector if the
/// infidelity exceeds the trigger. Returns the corrected point and its
/// infidelity, or the failing infidelity.
fn predict_correct<T: Scalar>(
    p: &Protocol<T>,
    dir: &[T],
    t: T,
    trigger: f64,
    cfg: &NavigationConfig,
) -> Result<std::result::Result<(Protocol<T>, T), f64>> {
    let Some(q) = offset(p, dir, t) else {
        return Ok(Err(f64::INFINITY));
    };
    let value = infidelity(&q);
    let trigger = T::lit(trigger);
    if value <= trigger {
        return Ok(Ok((q, value)));
    }
    let (q, value) = correct(&q, T::lit(cfg.target()), cfg.corrector_budget)?;
    if value <= trigger {
        Ok(Ok((q, value)))
    } else {
        Ok(Err(value.to_f64_lossy()))
    }
}

/// Descends `cost` inside the solution set: predictor steps along `−P∇C`,
/// where `P` projects out `span{Re ∇β, Im ∇β}`, each followed (when the
/// infidelity exceeds the trigger) by a Gauss–Newton corrector. The Armijo
/// test is applied to the corrected point, so recorded costs never increase.
/// On stall the next refinement factor of the schedule is applied.
pub fn navigate<T: Scalar>(
    solution: &Protocol<T>,
    cost: SecondaryCost,
    cfg: &NavigationConfig,
) -> Result<Navigation<T>> {
    cfg.validate()?;
    if solution.is_empty() {
        return Err(Error::EmptyProtocol);
    }
    let start_infidelity = infidelity(solution).to_f64_lossy();
    if !(start_infidelity < cfg.infidelity_threshold) {
        return Err(Error::NotASolution {
            infidelity: start_infidelity,
            threshold: cfg.infidelity_threshold,
        });
    }
    let initial_cost = cost.value(solution.omegas())?.to_f64_lossy();
    // A start above the trigger (a near-solution the corrector cannot
    // improve) is navigated at its own infidelity level.
    let trigger = cfg.trigger().max(start_infidelity);

    let null_tolerance = T::lit(cfg.null_tolerance);
    let mut schedule = cfg.doubling.iter().copied();
    let mut p = solution.clone();
    let mut step = T::lit(cfg.step.initial_step);
    let mut trajectory = DescentTrajectory::default();
    let mut iteration = 0;

    let status = loop {
        let bundle = gradient(&p)?;
        let basis = CurvatureBasis::new(&bundle.grad_beta, null_tolerance);
        let value = cost.value(p.omegas())?;
        let projected = basis.project(&cost.gradient(p.omegas())?);
        let pg = max_abs(&projected);
        let snapshot = || TrajectoryRecord {
            iteration,
            infidelity: bundle.infidelity.to_f64_lossy(),
            cost: value.to_f64_lossy(),
            pgrad_norm: pg.to_f64_lossy(),
            omegas: p.omegas().to_vec(),
        };

        let mut stalled = pg < T::lit(cfg.stall_tolerance);
        if !stalled && iteration >= cfg.max_iterations {
            trajectory.push(snapshot());
            break NavigationStatus::IterationBudget;
        }
        if !stalled {
            if iteration % cfg.record_every == 0 {
                trajectory.push(snapshot());
            }
            let dir: Vec<T> = projected.iter().map(|&g| -g).collect();
            let slope = -dot(&projected, &projected);
            let mut t = step;
            let mut failure = None;
            let mut accepted = None;
            while t >= T::lit(cfg.step.min_step) {
                match predict_correct(&p, &dir, t, trigger, cfg)? {
                    Ok((q, q_infidelity)) => {
                        failure = None;
                        let q_cost = cost.value(q.omegas())?;
                        if cfg.step.sufficient(value, q_cost, t, slope) {
                            accepted = Some((q, q_infidelity));
                            break;
                        }
                    }
                    Err(v) => failure = Some(v),
                }
                t = t * T::lit(cfg.step.shrink);
            }
            match (accepted, failure) {
                (Some((q, q_infidelity)), _) => {
                    trajectory.max_infidelity =
                        trajectory.max_infidelity.max(q_infidelity.to_f64_lossy());
                    trajectory.accepted_steps += 1;
                    step = t * T::lit(cfg.step.growth);
                    p = q;
                    iteration += 1;
                    continue;
                }
                (None, Some(v)) => {
                    trajectory.push(snapshot());
                    break NavigationStatus::CorrectorFailed { infidelity: v };
                }
                (None, None) => stalled = true,
            }
        }

        debug_assert!(stalled);
        trajectory.push(snapshot());
        match schedule.next() {
            Some(factor) => {
                p = p.refine(factor)?;
                trajectory.refinements.push((iteration, p.len()));
                step = T::lit(cfg.step.initial_step);
                iteration += 1;
            }
            None if pg < T::lit(cfg.stall_tolerance) => break NavigationStatus::Converged,
            None => break NavigationStatus::LineSearchStalled,
        }
    };
    let final_cost = cost.value(p.omegas())?.to_f64_lossy();
    Ok(Navigation {
        protocol: p,
        trajectory,
        status,
        initial_cost,
        final_cost,
    })
}
