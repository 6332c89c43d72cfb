// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use qho_control::linalg::{dot, symmetric_spectrum};
use qho_control::navigator::{null_projector, solve, DescentConfig, Task};
use qho_control::objectives::{
    c1, c1_grad, c2, c2_grad, min_theta_infidelity, symplectic_final, target_matrix,
};
use qho_control::propagator::{
    final_bogoliubov, infidelity, propagate, step_matrix, wronskian_defect,
};
use qho_control::sensitivities::{gradient, hessian, optimal_hessian};
use qho_control::{Complex, Protocol};

fn protocol(max_len: usize) -> impl Strategy<Value = Protocol> {
    (
        0.1..2.0f64,
        0.1..2.0f64,
        0.01..0.5f64,
        prop::collection::vec(-2.0..2.0f64, 1..=max_len),
    )
        .prop_map(|(w0, wt, dt, omegas)| Protocol::new(w0, wt, dt, omegas).unwrap())
}

fn state_distance(a: &Protocol, b: &Protocol) -> f64 {
    let (x, y) = (propagate(a), propagate(b));
    (x.f - y.f).norm().max((x.fdot - y.fdot).norm())
}

fn fd(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conservation_laws(p in protocol(64)) {
        let pair = final_bogoliubov(&p);
        prop_assert!(pair.unitarity_defect().abs() < 1e-10);
        prop_assert!(wronskian_defect(&propagate(&p)) < 1e-10);
    }

    #[test]
    fn step_matrices_are_unimodular(w in -5.0..5.0f64, dt in 1e-6..1.0f64) {
        prop_assert!((step_matrix(w, dt).det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn refinement_preserves_dynamics(p in protocol(32), k in 1usize..5) {
        prop_assert!(state_distance(&p, &p.refine(k).unwrap()) < 1e-12);
    }

    #[test]
    fn refinement_composes(p in protocol(16), a in 1usize..4, b in 1usize..4) {
        let twice = p.refine(a).unwrap().refine(b).unwrap();
        let once = p.refine(a * b).unwrap();
        prop_assert_eq!(twice.omegas(), once.omegas());
    }

    #[test]
    fn collapsing_chunk_constant_protocols_preserves_dynamics(
        levels in prop::collection::vec(-2.0..2.0f64, 1..6),
        k in 1usize..5,
        dt in 0.01..0.3f64,
    ) {
        let coarse = Protocol::new(1.0, 0.25, dt, levels).unwrap();
        let fine = coarse.refine(k).unwrap();
        let collapsed = fine.collapse(coarse.len()).unwrap();
        prop_assert!(state_distance(&collapsed, &coarse) < 1e-12);
        prop_assert!(c2(fine.omegas(), coarse.len()).unwrap() < 1e-24);
    }

    #[test]
    fn sign_flip_leaves_dynamics_unchanged(p in protocol(24), idx in any::<prop::sample::Index>()) {
        let k = idx.index(p.len());
        let mut omegas = p.omegas().to_vec();
        omegas[k] = -omegas[k];
        prop_assert!(state_distance(&p, &p.with_omegas(omegas.clone()).unwrap()) < 1e-14);

        let g = gradient(&p).unwrap().grad_beta;
        let flipped = gradient(&p.with_omegas(omegas).unwrap()).unwrap().grad_beta;
        for (i, (a, b)) in g.iter().zip(&flipped).enumerate() {
            let expected = if i == k { -a } else { *a };
            prop_assert!((expected - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn secondary_costs_are_translation_invariant(
        omegas in prop::collection::vec(-3.0..3.0f64, 2..40),
        shift in -5.0..5.0f64,
    ) {
        let shifted: Vec<f64> = omegas.iter().map(|w| w + shift).collect();
        prop_assert!((c1(&omegas) - c1(&shifted)).abs() < 1e-9 * (1.0 + c1(&omegas)));
        prop_assert!(c1_grad(&omegas).iter().sum::<f64>().abs() < 1e-10);
        let chunks = if omegas.len() % 2 == 0 { 2 } else { 1 };
        let (a, b) = (c2(&omegas, chunks).unwrap(), c2(&shifted, chunks).unwrap());
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
        prop_assert!(c2_grad(&omegas, chunks).unwrap().iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn secondary_gradients_match_differences(omegas in prop::collection::vec(-2.0..2.0f64, 2..30)) {
        // Both costs are quadratic, so central differences are exact up to
        // the rounding of the cost itself.
        let h = 1e-7;
        let numeric = fd(c1, &omegas, h);
        let tol = 1e-8 * (1.0 + c1(&omegas));
        for (a, b) in c1_grad(&omegas).iter().zip(&numeric) {
            prop_assert!((a - b).abs() < tol);
        }
        let chunks = if omegas.len() % 2 == 0 { 2 } else { 1 };
        let numeric = fd(|w| c2(w, chunks).unwrap(), &omegas, h);
        let tol = 1e-8 * (1.0 + c2(&omegas, chunks).unwrap());
        for (a, b) in c2_grad(&omegas, chunks).unwrap().iter().zip(&numeric) {
            prop_assert!((a - b).abs() < tol);
        }
    }

    #[test]
    fn symplectic_matrices_are_unimodular(p in protocol(32), theta in -10.0..10.0f64) {
        let s = symplectic_final(&propagate(&p), p.omega0()).unwrap();
        prop_assert!((s.det() - 1.0).abs() < 1e-10);
        let w = target_matrix(theta, p.omega0(), p.omega_t()).unwrap();
        prop_assert!((w.det() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projector_identities(re in prop::collection::vec(-1.0..1.0f64, 3..20), seed in any::<u64>()) {
        let im: Vec<f64> = re.iter().enumerate().map(|(i, x)| (x * 3.7 + (seed % 97) as f64 * 0.01 * i as f64).sin()).collect();
        let g: Vec<Complex> = re.iter().zip(&im).map(|(&a, &b)| Complex::new(a, b)).collect();
        let p = null_projector(&g);
        let m = re.len();
        let p2 = &p * &p;
        let mut idem: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                idem = idem.max((p2[(i, j)] - p[(i, j)]).abs());
                prop_assert_eq!(p[(i, j)], p[(j, i)]);
            }
        }
        prop_assert!(idem < 1e-12);
        for v in [&re, &im] {
            let pv: Vec<f64> = (0..m).map(|i| (0..m).map(|j| p[(i, j)] * v[j]).sum()).collect();
            prop_assert!(pv.iter().all(|x| x.abs() < 1e-10));
        }
        let trace: f64 = (0..m).map(|i| p[(i, i)]).sum();
        prop_assert!((trace - (m as f64 - 2.0)).abs() < 1e-10);
    }

    #[test]
    fn optimal_hessian_has_rank_two(re in prop::collection::vec(-1.0..1.0f64, 3..30)) {
        let g: Vec<Complex> = re.iter().enumerate().map(|(i, &a)| Complex::new(a, (i as f64).cos())).collect();
        let spectrum = symmetric_spectrum(&optimal_hessian(&g));
        prop_assert!(spectrum[2].abs() < 1e-12 * spectrum[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn far_from_solutions_every_phase_is_poor(omegas in prop::collection::vec(0.1..2.0f64, 2..12)) {
        let p = Task::EXPANSION.protocol(omegas).unwrap();
        prop_assume!(infidelity(&p) > 1e-2);
        prop_assert!(min_theta_infidelity(&p, 4096).1 > 1e-3);
    }
}

#[test]
fn solutions_match_some_phase_and_have_rank_two_curvature() {
    for seed in 0..4 {
        let cfg = DescentConfig {
            seed,
            ..Default::default()
        };
        let p = solve::<f64>(&cfg, 16, &Task::EXPANSION).unwrap().protocol;
        assert!(infidelity(&p) < 1e-10);
        assert!(min_theta_infidelity(&p, 4096).1 < 1e-6);

        let bundle = hessian(&p).unwrap();
        let spectrum = symmetric_spectrum(bundle.hess_infidelity.as_ref().unwrap());
        let above = spectrum.iter().filter(|&&l| l > 1e-8 * spectrum[0]).count();
        assert_eq!(above, 2);
        assert!(spectrum.last().unwrap() > &(-1e-10 * spectrum[0]));
    }
}

#[test]
fn null_directions_change_infidelity_at_fourth_order() {
    let cfg = DescentConfig {
        seed: 0,
        ..Default::default()
    };
    let p = solve::<f64>(&cfg, 12, &Task::EXPANSION).unwrap().protocol;
    assert!(infidelity(&p) < 1e-20);
    let b = gradient(&p).unwrap();
    let (re, _) = b.grad_beta_parts();
    let projector = null_projector(&b.grad_beta);
    let raw: Vec<f64> = (0..p.len()).map(|i| ((i * 7 + 3) as f64).sin()).collect();
    let mut v: Vec<f64> = (0..p.len())
        .map(|i| (0..p.len()).map(|j| projector[(i, j)] * raw[j]).sum())
        .collect();
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    let n = dot(&re, &re).sqrt();
    let r: Vec<f64> = re.iter().map(|x| x / n).collect();

    let slope = |dir: &[f64]| {
        let eps = [1e-1, 1e-2, 1e-3];
        let values: Vec<f64> = eps
            .iter()
            .map(|e| {
                let omegas = p.omegas().iter().zip(dir).map(|(w, d)| w + e * d).collect();
                infidelity(&p.with_omegas(omegas).unwrap()) - infidelity(&p)
            })
            .collect();
        log_log_slope(&eps, &values)
    };
    assert!((slope(&v) - 4.0).abs() < 0.3);
    assert!((slope(&r) - 2.0).abs() < 0.2);
}

fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
