// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Solution curves of three-pulse protocols.
//!
//! With `M = 3` the solution set `β = 0` (two real equations) is
//! one-dimensional, and its tangent is `Re ∇β × Im ∇β`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descent::{correct, solve};
use super::{DescentConfig, Task};
use crate::propagator::infidelity;
use crate::protocol::Protocol;
use crate::sensitivities::gradient;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Arc length of each predictor step.
    pub step: f64,
    pub max_steps: usize,
    /// Tracing stops when any pulse leaves `[box_lo, box_hi]`.
    pub box_lo: f64,
    pub box_hi: f64,
    /// Closure is tested only after this many steps.
    pub min_closure_steps: usize,
    /// Flip the initial direction.
    pub reverse: bool,
    pub corrector_budget: usize,
    /// Infidelity every vertex is corrected below.
    pub corrector_tolerance: f64,
    pub infidelity_threshold: f64,
    /// Cloud points closer than this to a traced curve join its component.
    pub cluster_distance: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            step: 0.01,
            max_steps: 50_000,
            box_lo: -10.0,
            box_hi: 10.0,
            min_closure_steps: 10,
            reverse: false,
            corrector_budget: 20,
            corrector_tolerance: 1e-20,
            infidelity_threshold: 1e-5,
            cluster_distance: 0.05,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.box_lo < self.box_hi) || !(self.cluster_distance > 0.0) {
            return Err(Error::InvalidConfig(
                "continuation step, box and cluster distance must be positive".into(),
            ));
        }
        if !(self.corrector_tolerance > 0.0)
            || !(self.corrector_tolerance < self.infidelity_threshold)
        {
            return Err(Error::InvalidConfig(
                "corrector tolerance must lie in (0, I_th)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Returned to within two steps of the start.
    Closed,
    /// Left the configured box; the curve is reported open.
    LeftBox,
    StepBudget,
}

#[derive(Debug, Clone)]
pub struct LevelsetCurve<T: Scalar> {
    pub vertices: Vec<Protocol<T>>,
    pub termination: Termination,
}

impl<T: Scalar> LevelsetCurve<T> {
    pub fn is_closed(&self) -> bool {
        self.termination == Termination::Closed
    }

    /// Distance from `point` to the polyline (closing segment included for
    /// closed curves).
    pub fn distance_to(&self, point: &[T]) -> f64 {
        let pts: Vec<[f64; 3]> = self.vertices.iter().map(|v| as_point(v.omegas())).collect();
        let x = as_point(point);
        if pts.len() == 1 {
            return dist(&pts[0], &x);
        }
        let mut best = f64::INFINITY;
        let closing = self.is_closed().then(|| (pts[pts.len() - 1], pts[0]));
        for (a, b) in pts.windows(2).map(|w| (w[0], w[1])).chain(closing) {
            best = best.min(segment_distance(&a, &b, &x));
        }
        best
    }
}

fn as_point<T: Scalar>(omegas: &[T]) -> [f64; 3] {
    [
        omegas[0].to_f64_lossy(),
        omegas[1].to_f64_lossy(),
        omegas[2].to_f64_lossy(),
    ]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn segment_distance(a: &[f64; 3], b: &[f64; 3], x: &[f64; 3]) -> f64 {
    let ab: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
    let ax: Vec<f64> = (0..3).map(|i| x[i] - a[i]).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let proj = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    dist(&proj, x)
}

/// Unit tangent `Re ∇β × Im ∇β / ‖·‖`.
fn tangent<T: Scalar>(p: &Protocol<T>) -> Result<[T; 3]> {
    let b = gradient(p)?;
    let (r, i) = b.grad_beta_parts();
    let t = [
        r[1] * i[2] - r[2] * i[1],
        r[2] * i[0] - r[0] * i[2],
        r[0] * i[1] - r[1] * i[0],
    ];
    let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    if !(n > T::zero()) {
        return Err(Error::InvalidConfig(
            "degenerate tangent: Re ∇β and Im ∇β are collinear".into(),
        ));
    }
    Ok(t.map(|x| x / n))
}

fn check_start<T: Scalar>(solution: &Protocol<T>, threshold: f64) -> Result<()> {
    if solution.len() != 3 {
        return Err(Error::WrongDimension {
            expected: 3,
            actual: solution.len(),
        });
    }
    let value = infidelity(solution).to_f64_lossy();
    if !(value < threshold) {
        return Err(Error::NotASolution {
            infidelity: value,
            threshold,
        });
    }
    Ok(())
}

fn trace_direction<T: Scalar>(
    start: &Protocol<T>,
    sign: T,
    cfg: &ContinuationConfig,
) -> Result<LevelsetCurve<T>> {
    let tolerance = T::lit(cfg.corrector_tolerance);
    let h = T::lit(cfg.step);
    let origin = as_point(start.omegas());
    let mut direction = tangent(start)?.map(|x| x * sign);
    let mut vertices = vec![start.clone()];
    let mut p = start.clone();
    let inside = |q: &Protocol<T>| {
        q.omegas().iter().all(|w| {
            let w = w.to_f64_lossy();
            w >= cfg.box_lo && w <= cfg.box_hi
        })
    };
    for k in 1..=cfg.max_steps {
        let mut step = h;
        let mut next = None;
        for _ in 0..6 {
            let omegas = p
                .omegas()
                .iter()
                .zip(&direction)
                .map(|(&w, &d)| w + step * d)
                .collect();
            let (q, value) = correct(&p.with_omegas(omegas)?, tolerance, cfg.corrector_budget)?;
            if value < tolerance {
                next = Some(q);
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some(q) = next else {
            return Err(Error::CorrectorFailed {
                infidelity: infidelity(&p).to_f64_lossy(),
                threshold: cfg.corrector_tolerance,
            });
        };
        let mut t = tangent(&q)?;
        let dot = t
            .iter()
            .zip(&direction)
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b);
        if dot < T::zero() {
            t = t.map(|x| -x);
        }
        direction = t;
        p = q;
        vertices.push(p.clone());
        if !inside(&p) {
            return Ok(LevelsetCurve {
                vertices,
                termination: Termination::LeftBox,
            });
        }
        if k >= cfg.min_closure_steps && dist(&as_point(p.omegas()), &origin) < 2.0 * cfg.step {
            return Ok(LevelsetCurve {
                vertices,
                termination: Termination::Closed,
            });
        }
    }
    Ok(LevelsetCurve {
        vertices,
        termination: Termination::StepBudget,
    })
}

/// Predictor–corrector continuation along the solution curve through
/// `solution`. Stops on closure (back within two steps of the start after at
/// least `min_closure_steps` steps), on leaving the box, or on the step
/// budget. Open curves are reported through [`Termination`], not as errors.
pub fn trace_levelset<T: Scalar>(
    solution: &Protocol<T>,
    cfg: &ContinuationConfig,
) -> Result<LevelsetCurve<T>> {
    cfg.validate()?;
    check_start(solution, cfg.infidelity_threshold)?;
    let (start, _) = correct(
        solution,
        T::lit(cfg.corrector_tolerance),
        cfg.corrector_budget,
    )?;
    let sign = if cfg.reverse { -T::one() } else { T::one() };
    trace_direction(&start, sign, cfg)
}

/// Like [`trace_levelset`], but an open curve is also traced backwards from
/// the start so that the whole in-box arc is covered.
fn trace_component<T: Scalar>(
    solution: &Protocol<T>,
    cfg: &ContinuationConfig,
) -> Result<LevelsetCurve<T>> {
    let forward = trace_levelset(solution, cfg)?;
    if forward.is_closed() {
        return Ok(forward);
    }
    let start = forward.vertices[0].clone();
    let sign = if cfg.reverse { T::one() } else { -T::one() };
    let backward = trace_direction(&start, sign, cfg)?;
    let mut vertices: Vec<Protocol<T>> = backward.vertices.into_iter().rev().collect();
    vertices.extend(forward.vertices.into_iter().skip(1));
    Ok(LevelsetCurve {
        vertices,
        termination: forward.termination,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudPoint<T> {
    pub seed: u64,
    pub omegas: [T; 3],
    pub infidelity: f64,
    pub component: usize,
}

#[derive(Debug, Clone)]
pub struct LevelsetCloud<T: Scalar> {
    pub points: Vec<CloudPoint<T>>,
    /// Traced curve of each component, indexed by component label.
    pub curves: Vec<LevelsetCurve<T>>,
}

impl<T: Scalar> LevelsetCloud<T> {
    pub fn components(&self) -> usize {
        self.curves.len()
    }

    /// CSV `omega1,omega2,omega3,I,component`, ordered by seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega1,omega2,omega3,I,component\n");
        for pt in &self.points {
            let [a, b, c] = pt.omegas;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                a.shortest(),
                b.shortest(),
                c.shortest(),
                pt.infidelity.shortest(),
                pt.component
            );
        }
        out
    }

    /// CSV `component,vertex,omega1,omega2,omega3,I` of the traced polylines.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("component,vertex,omega1,omega2,omega3,I\n");
        for (c, curve) in self.curves.iter().enumerate() {
            for (k, v) in curve.vertices.iter().enumerate() {
                let w = v.omegas();
                let _ = writeln!(
                    out,
                    "{c},{k},{},{},{},{}",
                    w[0].shortest(),
                    w[1].shortest(),
                    w[2].shortest(),
                    infidelity(v).to_f64_lossy().shortest()
                );
            }
        }
        out
    }
}

/// Solves the three-pulse task from `n_seeds` seeds (`cfg.seed + k`) and
/// groups the solutions into connected components by tracing a curve from
/// the first point of each new component. Solves run in parallel; the result
/// depends only on the inputs.
pub fn scan_levelset<T: Scalar>(
    task: &Task,
    cfg: &DescentConfig,
    continuation: &ContinuationConfig,
    n_seeds: usize,
) -> Result<LevelsetCloud<T>> {
    cfg.validate()?;
    continuation.validate()?;
    let solutions: Vec<(u64, Protocol<T>)> = (0..n_seeds as u64)
        .into_par_iter()
        .filter_map(|k| {
            let seeded = DescentConfig {
                seed: cfg.seed.wrapping_add(k),
                ..cfg.clone()
            };
            solve::<T>(&seeded, 3, task)
                .ok()
                .map(|s| (seeded.seed, s.protocol))
        })
        .collect();

    let mut curves: Vec<LevelsetCurve<T>> = Vec::new();
    let mut points = Vec::with_capacity(solutions.len());
    for (seed, p) in solutions {
        let value = infidelity(&p).to_f64_lossy();
        if !(value < continuation.infidelity_threshold) {
            continue;
        }
        let nearest = curves
            .iter()
            .enumerate()
            .map(|(c, curve)| (c, curve.distance_to(p.omegas())))
            .filter(|&(_, d)| d < continuation.cluster_distance)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let component = match nearest {
            Some((c, _)) => c,
            None => {
                let curve = trace_component(&p, continuation).unwrap_or_else(|_| LevelsetCurve {
                    vertices: vec![p.clone()],
                    termination: Termination::StepBudget,
                });
                curves.push(curve);
                curves.len() - 1
            }
        };
        let w = p.omegas();
        points.push(CloudPoint {
            seed,
            omegas: [w[0], w[1], w[2]],
            infidelity: value,
            component,
        });
    }
    Ok(LevelsetCloud { points, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigator::Task;

    fn three_pulse_solution() -> Protocol<f64> {
        let cfg = DescentConfig {
            seed: 1,
            omega_lo: 0.0,
            ..Default::default()
        };
        solve::<f64>(&cfg, 3, &Task::EXPANSION).unwrap().protocol
    }

    #[test]
    fn curve_closes_on_itself() {
        let p = three_pulse_solution();
        let curve = trace_levelset(&p, &ContinuationConfig::default()).unwrap();
        assert_eq!(curve.termination, Termination::Closed);
        assert!(curve.vertices.iter().all(|v| infidelity(v) < 1e-5));
    }

    #[test]
    fn reversed_trace_covers_the_same_curve() {
        let p = three_pulse_solution();
        let cfg = ContinuationConfig::default();
        let forward = trace_levelset(&p, &cfg).unwrap();
        let backward = trace_levelset(
            &p,
            &ContinuationConfig {
                reverse: true,
                ..cfg
            },
        )
        .unwrap();
        assert!(backward.is_closed());
        for v in backward.vertices.iter().step_by(25) {
            assert!(forward.distance_to(v.omegas()) < 1e-3);
        }
    }

    #[test]
    fn small_box_leaves_the_curve_open() {
        let p = three_pulse_solution();
        let cfg = ContinuationConfig {
            box_lo: -3.0,
            box_hi: 3.0,
            ..Default::default()
        };
        let curve = trace_levelset(&p, &cfg).unwrap();
        assert_eq!(curve.termination, Termination::LeftBox);
    }

    #[test]
    fn only_three_pulses_are_traced() {
        let p = Task::EXPANSION.protocol(vec![1.0; 4]).unwrap();
        let err = trace_levelset(&p, &ContinuationConfig::default()).unwrap_err();
        assert_eq!(
            err,
            Error::WrongDimension {
                expected: 3,
                actual: 4
            }
        );
    }

    #[test]
    fn distance_to_polyline() {
        let curve = LevelsetCurve {
            vertices: vec![
                Protocol::new(1.0, 1.0, 0.1, vec![0.0, 0.0, 0.0]).unwrap(),
                Protocol::new(1.0, 1.0, 0.1, vec![1.0, 0.0, 0.0]).unwrap(),
            ],
            termination: Termination::LeftBox,
        };
        assert!((curve.distance_to(&[0.5, 1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((curve.distance_to(&[2.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_scan_labels_are_reproducible() {
        let task = Task::EXPANSION;
        let cfg = DescentConfig {
            omega_lo: 0.0,
            ..Default::default()
        };
        let cont = ContinuationConfig::default();
        let a = scan_levelset::<f64>(&task, &cfg, &cont, 12).unwrap();
        let b = scan_levelset::<f64>(&task, &cfg, &cont, 12).unwrap();
        assert_eq!(a.points, b.points);
        assert!(a.points.iter().all(|p| p.infidelity < 1e-5));
        assert!(a.points.windows(2).all(|w| w[0].seed < w[1].seed));
        assert!(a.to_csv().starts_with("omega1,omega2,omega3,I,component\n"));
    }
}
