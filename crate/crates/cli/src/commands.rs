// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qho_control::linalg::symmetric_spectrum;
use qho_control::navigator::{self, NavigationConfig, NavigationStatus};
use qho_control::objectives::{min_theta_infidelity, theta_scan as scan, SecondaryCost};
use qho_control::propagator::{final_bogoliubov, particle_number, propagate, wronskian_defect};
use qho_control::sensitivities::hessian;
use qho_control::{Error, Protocol, Scalar};
use serde_json::json;

use crate::config::{resolve, RunConfig};
use crate::{CliError, CostKind, NavigateArgs};

fn read_protocol(path: &Path) -> Result<Protocol, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(Protocol::from_json(&text)?)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn emit(path: Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(&p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn protocol_json(p: &Protocol) -> String {
    let mut text = p.to_json();
    text.push('\n');
    text
}

pub fn solve(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    trajectory: Option<PathBuf>,
) -> Result<(), CliError> {
    let (mut cfg, base) = RunConfig::load(config)?;
    let pulses = cfg
        .pulses
        .ok_or_else(|| CliError::Config("solve requires M".into()))?;
    if let Some(seed) = seed {
        cfg.descent.seed = seed;
    }
    let solution = navigator::solve::<f64>(&cfg.descent, pulses, &cfg.task)?;
    let out = resolve(out, cfg.output.protocol.as_ref(), &base, "protocol.json");
    let trajectory = resolve(
        trajectory,
        cfg.output.trajectory.as_ref(),
        &base,
        "trajectory.csv",
    );
    write(&out, &protocol_json(&solution.protocol))?;
    write(&trajectory, &solution.descent.trajectory.to_csv())?;
    println!(
        "{}",
        json!({
            "infidelity": solution.descent.report.infidelity,
            "restarts": solution.restarts,
            "classification": solution.descent.report.classification,
        })
    );
    Ok(())
}

pub fn navigate(
    args: NavigateArgs,
    default_cost: CostKind,
    compress: bool,
) -> Result<(), CliError> {
    let (mut cfg, base) = match &args.config {
        Some(path) => {
            let (c, base) = RunConfig::load(path)?;
            (c.navigation, Some((c.output, base)))
        }
        None => (NavigationConfig::default(), None),
    };
    if let Some(double) = args.double {
        cfg.doubling = double;
    }
    cfg.validate()?;
    let cost = match args.cost.unwrap_or(default_cost) {
        CostKind::C1 => SecondaryCost::Smoothness,
        CostKind::C2 => SecondaryCost::Compression {
            chunks: args.chunks,
        },
    };
    let p = read_protocol(&args.input)?;
    if let SecondaryCost::Compression { chunks } = cost {
        // Fail before navigating when the chunking can never apply.
        let last = cfg.doubling.iter().product::<usize>() * p.len();
        if chunks == 0 || p.len() % chunks != 0 || last % chunks != 0 {
            return Err(Error::IndivisibleChunking {
                pulses: p.len(),
                chunks,
            }
            .into());
        }
    }

    let (outputs, base) = base.unwrap_or_default();
    let default_name = if compress {
        "compressed.json"
    } else {
        "smoothed.json"
    };
    let out = resolve(args.out, outputs.protocol.as_ref(), &base, default_name);
    let trajectory = resolve(
        args.trajectory,
        outputs.trajectory.as_ref(),
        &base,
        "trajectory.csv",
    );

    let run = navigator::navigate(&p, cost, &cfg)?;
    write(&trajectory, &run.trajectory.to_csv())?;
    write(&out, &protocol_json(&run.protocol))?;
    let mut summary = json!({
        "cost": cost.name(),
        "initial_cost": run.initial_cost,
        "final_cost": run.final_cost,
        "pulses": run.protocol.len(),
        "accepted_steps": run.trajectory.accepted_steps,
        "max_infidelity": run.trajectory.max_infidelity,
    });
    if compress {
        if let SecondaryCost::Compression { chunks } = cost {
            let collapsed = run.protocol.collapse(chunks)?;
            let path = resolve(
                args.collapsed,
                outputs.collapsed.as_ref(),
                &base,
                "collapsed.json",
            );
            write(&path, &protocol_json(&collapsed))?;
            summary["collapsed_infidelity"] =
                json!(qho_control::propagator::infidelity(&collapsed));
        }
    }
    println!("{summary}");
    if let NavigationStatus::CorrectorFailed { .. } = run.status {
        run.into_result(&cfg)?;
    }
    Ok(())
}

pub fn spectrum(input: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let p = read_protocol(input)?;
    let h = hessian(&p)?;
    let values = symmetric_spectrum(h.hess_infidelity.as_ref().expect("hessian present"));
    let mut csv = String::from("index,eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, v.shortest());
    }
    emit(out, &csv)
}

pub fn verify(input: &Path) -> Result<(), CliError> {
    let p = read_protocol(input)?;
    let pair = final_bogoliubov(&p);
    let report = json!({
        "pulses": p.len(),
        "infidelity": pair.beta.norm_sqr(),
        "unitarity_defect": pair.unitarity_defect(),
        "wronskian_defect": wronskian_defect(&propagate(&p)),
        "particle_number": {
            "n0_0": particle_number(0.0, pair.beta)?,
            "n0_1": particle_number(1.0, pair.beta)?,
        },
    });
    println!("{report}");
    Ok(())
}

pub fn levelset(
    config: &Path,
    seeds: usize,
    seed: Option<u64>,
    out: Option<PathBuf>,
    curves: Option<PathBuf>,
) -> Result<(), CliError> {
    let (mut cfg, base) = RunConfig::load(config)?;
    if cfg.pulses.is_some_and(|m| m != 3) {
        return Err(Error::WrongDimension {
            expected: 3,
            actual: cfg.pulses.unwrap_or_default(),
        }
        .into());
    }
    if let Some(seed) = seed {
        cfg.descent.seed = seed;
    }
    let cloud = navigator::scan_levelset::<f64>(&cfg.task, &cfg.descent, &cfg.continuation, seeds)?;
    write(
        &resolve(out, cfg.output.cloud.as_ref(), &base, "cloud.csv"),
        &cloud.to_csv(),
    )?;
    write(
        &resolve(curves, cfg.output.curves.as_ref(), &base, "curves.csv"),
        &cloud.curves_csv(),
    )?;
    let closed = cloud.curves.iter().filter(|c| c.is_closed()).count();
    println!(
        "{}",
        json!({ "points": cloud.points.len(), "components": cloud.components(), "closed": closed })
    );
    Ok(())
}

/// Grid values plus the refined minimiser, in increasing `θ`.
pub fn theta_scan(input: &Path, points: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let p = read_protocol(input)?;
    let mut rows = scan(&p, points);
    let best = min_theta_infidelity(&p, points);
    if rows.iter().all(|r| r.0 != best.0) {
        let at = rows.partition_point(|r| r.0 < best.0);
        rows.insert(at, best);
    }
    let mut csv = String::from("theta,J\n");
    for (theta, j) in rows {
        let _ = writeln!(csv, "{},{}", theta.shortest(), j.shortest());
    }
    emit(out, &csv)
}
