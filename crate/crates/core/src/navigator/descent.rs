// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::projector::CurvatureBasis;
use super::{
    CriticalPointReport, DescentConfig, DescentTrajectory, StepRule, Task, TrajectoryRecord,
};
use crate::linalg::{dot, max_abs, solve_spd, symmetric_spectrum};
use crate::propagator::infidelity;
use crate::protocol::Protocol;
use crate::sensitivities::{gradient, hessian, SensitivityBundle};
use crate::{Error, Result, Scalar};

/// Outcome of a single descent.
#[derive(Debug, Clone)]
pub struct Descent<T: Scalar> {
    pub protocol: Protocol<T>,
    pub report: CriticalPointReport,
    pub trajectory: DescentTrajectory<T>,
}

/// A solution found by [`solve`].
#[derive(Debug, Clone)]
pub struct Solution<T: Scalar> {
    pub protocol: Protocol<T>,
    /// Number of discarded descents before the successful one.
    pub restarts: usize,
    pub descent: Descent<T>,
}

/// Minimum-norm step `δ` solving the linearised `β + ∇β·δ = 0` in the least
/// squares sense. Directions of `span{Re ∇β, Im ∇β}` weaker than `tolerance`
/// (relative) are ignored.
pub fn gauss_newton_step<T: Scalar>(bundle: &SensitivityBundle<T>, tolerance: T) -> Vec<T> {
    let basis = CurvatureBasis::new(&bundle.grad_beta, tolerance);
    let (re, im) = bundle.grad_beta_parts();
    let residual = [bundle.beta.re, bundle.beta.im];
    // Coefficients of the two Jacobian rows in the orthonormal basis.
    let c: Vec<[T; 2]> = basis
        .vectors
        .iter()
        .map(|q| [dot(&re, q), dot(&im, q)])
        .collect();
    let y: Vec<T> = match c.as_slice() {
        [] => Vec::new(),
        [c0] => {
            let denom = c0[0] * c0[0] + c0[1] * c0[1];
            vec![-(c0[0] * residual[0] + c0[1] * residual[1]) / denom]
        }
        [c0, c1] => {
            // Solve [[c0.0, c1.0], [c0.1, c1.1]]·y = −residual.
            let det = c0[0] * c1[1] - c1[0] * c0[1];
            vec![
                -(c1[1] * residual[0] - c1[0] * residual[1]) / det,
                -(-c0[1] * residual[0] + c0[0] * residual[1]) / det,
            ]
        }
        _ => unreachable!("span of two vectors"),
    };
    let mut step = vec![T::zero(); bundle.len()];
    for (q, &yi) in basis.vectors.iter().zip(&y) {
        step.iter_mut()
            .zip(q)
            .for_each(|(s, &qi)| *s = *s + yi * qi);
    }
    step
}

pub(crate) fn offset<T: Scalar>(p: &Protocol<T>, dir: &[T], t: T) -> Option<Protocol<T>> {
    let omegas = p
        .omegas()
        .iter()
        .zip(dir)
        .map(|(&w, &d)| w + t * d)
        .collect();
    p.with_omegas(omegas).ok()
}

/// Backtracking on `objective` along `dir` from `t0`; returns the accepted
/// step and point.
pub(crate) fn backtrack<T: Scalar>(
    rule: &StepRule,
    p: &Protocol<T>,
    dir: &[T],
    value: T,
    slope: T,
    t0: T,
    mut accept: impl FnMut(&Protocol<T>) -> Option<T>,
) -> Option<(T, Protocol<T>, T)> {
    let mut t = t0;
    while t >= T::lit(rule.min_step) {
        if let Some(q) = offset(p, dir, t) {
            if let Some(v) = accept(&q) {
                if rule.sufficient(value, v, t, slope) {
                    return Some((t, q, v));
                }
            }
        }
        t = t * T::lit(rule.shrink);
    }
    None
}

fn record<T: Scalar>(
    iteration: usize,
    p: &Protocol<T>,
    b: &SensitivityBundle<T>,
    gmax: T,
) -> TrajectoryRecord<T> {
    TrajectoryRecord {
        iteration,
        infidelity: b.infidelity.to_f64_lossy(),
        cost: b.infidelity.to_f64_lossy(),
        pgrad_norm: gmax.to_f64_lossy(),
        omegas: p.omegas().to_vec(),
    }
}

/// Newton step on the full Hessian, for when the infidelity no longer
/// resolves the decrease. Accepted if it shrinks the gradient without
/// raising the infidelity.
fn newton_step<T: Scalar>(
    p: &Protocol<T>,
    bundle: &SensitivityBundle<T>,
) -> Result<Option<(Protocol<T>, SensitivityBundle<T>)>> {
    let h = hessian(p)?;
    let rhs: Vec<T> = bundle.grad_infidelity.iter().map(|&g| -g).collect();
    let Some(dir) = solve_spd(h.hess_infidelity.as_ref().expect("hessian present"), &rhs) else {
        return Ok(None);
    };
    let Some(q) = offset(p, &dir, T::one()) else {
        return Ok(None);
    };
    let next = gradient(&q)?;
    let better = max_abs(&next.grad_infidelity) < max_abs(&bundle.grad_infidelity)
        && next.infidelity <= bundle.infidelity;
    Ok(better.then_some((q, next)))
}

/// Gauss–Newton corrector: minimum-norm steps on `β` until the infidelity
/// drops below `target` or `budget` steps are spent. Each step is halved
/// until it does not increase the infidelity.
pub(crate) fn correct<T: Scalar>(
    p: &Protocol<T>,
    target: T,
    budget: usize,
) -> Result<(Protocol<T>, T)> {
    let mut p = p.clone();
    let mut value = infidelity(&p);
    for _ in 0..budget {
        if value < target {
            break;
        }
        let b = gradient(&p)?;
        let dir = gauss_newton_step(&b, T::lit(1e-10));
        let mut t = T::one();
        let mut improved = false;
        for _ in 0..30 {
            if let Some(q) = offset(&p, &dir, t) {
                let v = infidelity(&q);
                if v < value {
                    p = q;
                    value = v;
                    improved = true;
                    break;
                }
            }
            t = t * T::lit(0.5);
        }
        if !improved {
            break;
        }
    }
    Ok((p, value))
}

/// Gradient descent on `|β|²` with backtracking, stopping at a critical
/// point or when the iteration budget runs out (classified non-critical).
pub fn descend<T: Scalar>(p0: &Protocol<T>, cfg: &DescentConfig) -> Result<Descent<T>> {
    cfg.validate()?;
    if p0.is_empty() {
        return Err(Error::EmptyProtocol);
    }
    let threshold = T::lit(cfg.infidelity_threshold);
    let mut p = p0.clone();
    let mut step = T::lit(cfg.step.initial_step);
    let mut trajectory = DescentTrajectory::default();
    let mut bundle = gradient(&p)?;
    let mut iteration = 0;
    loop {
        let gmax = max_abs(&bundle.grad_infidelity);
        let polish_pending = cfg.polish
            && bundle.infidelity < threshold
            && bundle.infidelity >= T::lit(cfg.polish_tolerance);
        let done = (gmax < T::lit(cfg.grad_tolerance) && !polish_pending)
            || iteration >= cfg.max_iterations;
        if done || iteration % cfg.record_every == 0 {
            trajectory.push(record(iteration, &p, &bundle, gmax));
        }
        if done {
            break;
        }

        let steepest: Vec<T> = bundle.grad_infidelity.iter().map(|&g| -g).collect();
        let polishing = cfg.polish && bundle.infidelity < threshold;
        let mut dir = if polishing {
            gauss_newton_step(&bundle, T::lit(1e-10))
        } else {
            steepest.clone()
        };
        let mut slope = dot(&bundle.grad_infidelity, &dir);
        if !(slope < T::zero()) {
            dir = steepest.clone();
            slope = dot(&bundle.grad_infidelity, &dir);
        }
        let t0 = if polishing { T::one() } else { step };
        let mut found = backtrack(&cfg.step, &p, &dir, bundle.infidelity, slope, t0, |q| {
            Some(infidelity(q))
        });
        let mut polished = polishing;
        if found.is_none() && polishing {
            // Ill-conditioned Gauss–Newton step: fall back to the gradient.
            let slope = -dot(&bundle.grad_infidelity, &bundle.grad_infidelity);
            found = backtrack(
                &cfg.step,
                &p,
                &steepest,
                bundle.infidelity,
                slope,
                step,
                |q| Some(infidelity(q)),
            );
            polished = false;
        }
        let (q, next) = match found {
            Some((t, q, _)) => {
                if !polished {
                    step = t * T::lit(cfg.step.growth);
                }
                let next = gradient(&q)?;
                (q, next)
            }
            None => match newton_step(&p, &bundle)? {
                Some(found) => found,
                None => {
                    // No representable decrease: stalled at this point.
                    trajectory.push(record(iteration, &p, &bundle, gmax));
                    break;
                }
            },
        };
        p = q;
        bundle = next;
        trajectory.accepted_steps += 1;
        iteration += 1;
    }

    let gmax = max_abs(&bundle.grad_infidelity).to_f64_lossy();
    let infidelity = bundle.infidelity.to_f64_lossy();
    let spectrum = symmetric_spectrum(
        hessian(&p)?
            .hess_infidelity
            .as_ref()
            .expect("hessian present"),
    );
    let report = CriticalPointReport {
        classification: CriticalPointReport::classify(infidelity, gmax, cfg),
        infidelity,
        gradient_norm: gmax,
        spectrum,
    };
    Ok(Descent {
        protocol: p,
        report,
        trajectory,
    })
}

/// Random-restart search for a protocol with `I < I_th` using `pulses`
/// pulses. Deterministic in `cfg.seed`.
pub fn solve<T: Scalar>(cfg: &DescentConfig, pulses: usize, task: &Task) -> Result<Solution<T>> {
    cfg.validate()?;
    if pulses == 0 {
        return Err(Error::EmptyProtocol);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = f64::INFINITY;
    for restart in 0..cfg.max_restarts {
        let omegas = (0..pulses)
            .map(|_| T::lit(rng.gen_range(cfg.omega_lo..cfg.omega_hi)))
            .collect();
        let descent = descend(&task.protocol(omegas)?, cfg)?;
        best = best.min(descent.report.infidelity);
        if descent.report.infidelity < cfg.infidelity_threshold {
            return Ok(Solution {
                protocol: descent.protocol.clone(),
                restarts: restart,
                descent,
            });
        }
    }
    Err(Error::RestartBudgetExhausted {
        restarts: cfg.max_restarts,
        best_infidelity: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigator::Classification;

    #[test]
    fn exact_solution_returns_immediately() {
        let p = Protocol::new(1.0, 1.0, 0.3, vec![1.0; 5]).unwrap();
        let d = descend(&p, &DescentConfig::default()).unwrap();
        assert_eq!(d.report.classification, Classification::Solution);
        assert_eq!(d.trajectory.accepted_steps, 0);
        assert_eq!(d.protocol, p);
    }

    #[test]
    fn gauss_newton_step_solves_linearisation() {
        let p = Protocol::new(1.0_f64, 0.25, 0.3, vec![0.4, 1.3, 0.8, 1.6, 0.1, 0.9]).unwrap();
        let b = gradient(&p).unwrap();
        let d = gauss_newton_step(&b, 1e-10);
        let (re, im) = b.grad_beta_parts();
        assert!((dot(&re, &d) + b.beta.re).abs() < 1e-12);
        assert!((dot(&im, &d) + b.beta.im).abs() < 1e-12);
    }

    #[test]
    fn descent_is_monotone() {
        let task = Task::EXPANSION;
        let p = task.protocol(vec![0.3, 1.7, 0.9, 1.1, 0.2, 1.4]).unwrap();
        let cfg = DescentConfig {
            max_iterations: 200,
            ..Default::default()
        };
        let d = descend(&p, &cfg).unwrap();
        let values: Vec<f64> = d.trajectory.records.iter().map(|r| r.infidelity).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        assert!(values.last().unwrap() < &values[0]);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let cfg = DescentConfig::default();
        assert!(matches!(
            solve::<f64>(&cfg, 0, &Task::EXPANSION),
            Err(Error::EmptyProtocol)
        ));
    }
}
