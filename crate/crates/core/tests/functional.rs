mod common;

use deltactl::control_synthesis::{gauss_newton_step, noncontrollability_witness, solve_control, ControlOptions};
use deltactl::functional::{d0f_closed, evaluate_f, evaluate_v, gateaux_df, gateaux_dv, jacobian, FunctionalContext};
use deltactl::propagation::PropagatedTrace;
use deltactl::states::make_initial_state;
use deltactl::timebase::{ControlProfile, PhysicsParams, TimeGrid};
use deltactl::{Complex64, Error};
use rand::Rng;

fn context(n: usize, a: f64, b: f64) -> FunctionalContext {
    let p = PhysicsParams::new(-0.25, 1.0).unwrap();
    let s = make_initial_state(a, b, &p).unwrap();
    FunctionalContext::new(&s, &p, TimeGrid::new(1.0, n).unwrap()).unwrap()
}

fn profile(c: &[f64]) -> ControlProfile {
    ControlProfile::new(1.0, c.to_vec()).unwrap()
}

fn shifted(alpha: &[f64], u: &[f64], eps: f64) -> ControlProfile {
    profile(&alpha.iter().zip(u).map(|(a, d)| a + eps * d).collect::<Vec<_>>())
}

#[test]
fn free_functional_vanishes_for_two_states() {
    for (a, b) in [(0.5, 1.0), (0.3, 0.6)] {
        let f = evaluate_f(&context(1024, a, b), None).unwrap();
        assert!(f.norm() < 1e-6, "state ({a}, {b}): |F(0)| = {:e}", f.norm());
    }
}

#[test]
fn centered_differences_match_gateaux_at_random_points() {
    let seed = 99;
    let mut rng = common::rng(seed);
    let ctx = context(512, 0.5, 1.0);
    for _ in 0..4 {
        let alpha: Vec<f64> = (0..4).map(|_| rng.random_range(-0.05..0.05)).collect();
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps = 1e-5;
        let fd = (evaluate_f(&ctx, Some(&shifted(&alpha, &u, eps))).unwrap()
            - evaluate_f(&ctx, Some(&shifted(&alpha, &u, -eps))).unwrap())
            / (2.0 * eps);
        let an = gateaux_df(&ctx, Some(&profile(&alpha)), &profile(&u)).unwrap();
        assert!((fd - an).norm() <= 1e-4 * an.norm(), "seed {seed}: {fd} vs {an}");
    }
}

#[test]
fn one_sided_charge_differences_converge_linearly() {
    let ctx = context(256, 0.5, 1.0);
    let alpha = [0.03, -0.02];
    let u = [0.5, 1.0];
    let dv = gateaux_dv(&ctx, Some(&profile(&alpha)), &profile(&u)).unwrap();
    let v = evaluate_v(&ctx, Some(&profile(&alpha))).unwrap();
    let err = |eps: f64| {
        let ve = evaluate_v(&ctx, Some(&shifted(&alpha, &u, eps))).unwrap();
        ve.values()
            .iter()
            .zip(v.values())
            .zip(dv.values())
            .map(|((a, b), d)| ((a - b) / eps - d).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!((e1 / e2 - 2.0).abs() < 0.1, "ratio {}", e1 / e2);
}

#[test]
fn small_controls_follow_the_linearization() {
    let ctx = context(512, 0.5, 1.0);
    let e1 = profile(&[1.0]);
    let d = gateaux_df(&ctx, None, &e1).unwrap();
    let f0 = evaluate_f(&ctx, None).unwrap();
    let rem = |eps: f64| (evaluate_f(&ctx, Some(&profile(&[eps]))).unwrap() - f0 - d * eps).norm();
    // Second-order remainder: halving eps quarters it.
    let ratio = rem(2e-3) / rem(1e-3);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn jacobian_rows_predict_finite_differences() {
    let ctx = context(512, 0.5, 1.0);
    let alpha = [0.02, 0.01, -0.01, 0.0];
    let jac = jacobian(&ctx, Some(&profile(&alpha)), 4).unwrap();
    let c = [0.3, -0.2, 0.5, 0.1];
    let eps = 1e-5;
    let fd = (evaluate_f(&ctx, Some(&shifted(&alpha, &c, eps))).unwrap()
        - evaluate_f(&ctx, Some(&shifted(&alpha, &c, -eps))).unwrap())
        / (2.0 * eps);
    let m = jac.matrix();
    let pred_re: f64 = (0..4).map(|k| m[(0, k)] * c[k]).sum();
    let pred_im: f64 = (0..4).map(|k| m[(1, k)] * c[k]).sum();
    assert!((Complex64::new(pred_re, pred_im) - fd).norm() < 1e-6 * fd.norm());
}

#[test]
fn closed_form_and_chain_rule_linearizations_converge_together() {
    let e3 = profile(&[0.0, 0.0, 1.0]);
    let gap = |n: usize| {
        let ctx = context(n, 0.5, 1.0);
        (d0f_closed(&ctx, &e3).unwrap() - gateaux_df(&ctx, None, &e3).unwrap()).norm()
    };
    let (g1, g2) = (gap(512), gap(1024));
    assert!(g1 / g2 > 3.5, "gaps {g1:e}, {g2:e}");
}

#[test]
fn zero_trace_decouples_from_the_control() {
    let p = PhysicsParams::new(-0.25, 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let free = Complex64::new(0.25, -0.5);
    let ctx = FunctionalContext::from_trace(PropagatedTrace::zero(grid), free, &p).unwrap();
    for c in [vec![0.0], vec![0.3, -0.1, 0.2]] {
        let prof = profile(&c);
        assert!(evaluate_v(&ctx, Some(&prof)).unwrap().values().iter().all(|q| *q == Complex64::new(0.0, 0.0)));
        assert_eq!(evaluate_f(&ctx, Some(&prof)).unwrap(), free);
    }
}

#[test]
fn first_gauss_newton_step_leaves_a_quadratic_residual() {
    let ctx = context(1024, 0.5, 1.0);
    let d = d0f_closed(&ctx, &ControlProfile::basis(1.0, 8, 1).unwrap()).unwrap();
    let first_step_residual = |r: f64| {
        let z = d / d.norm() * r;
        let step = gauss_newton_step(&ctx, &[0.0; 8], z).unwrap();
        (evaluate_f(&ctx, Some(&profile(&step))).unwrap() - z).norm()
    };
    let (big, small) = (first_step_residual(1e-2), first_step_residual(1e-3));
    assert!(small <= 1e-3 * 1e-3, "residual {small:e} at |z| = 1e-3");
    let ratio = big / small;
    assert!((ratio - 100.0).abs() < 15.0, "ratio {ratio}");

    let z = d / d.norm() * 0.01;
    let sol = solve_control(&ctx, z, &ControlOptions::default()).unwrap();
    assert!(sol.converged && sol.residual <= 1e-8);
}

#[test]
fn zero_target_needs_no_iterations() {
    let ctx = context(512, 0.5, 1.0);
    let sol = solve_control(&ctx, Complex64::new(0.0, 0.0), &ControlOptions::default()).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!(sol.coeffs.iter().all(|&c| c == 0.0));
}

#[test]
fn unreachable_target_reports_best_iterate() {
    let ctx = context(512, 0.5, 1.0);
    let opts = ControlOptions { max_iter: 20, ..ControlOptions::default() };
    match solve_control(&ctx, Complex64::new(0.9, 0.0), &opts) {
        Err(Error::NoConvergence(best)) => {
            assert!(!best.converged && !best.within_trust_region);
            assert!(best.h1_norm <= opts.h1_max);
            let f = evaluate_f(&ctx, Some(&profile(&best.coeffs))).unwrap();
            assert!((best.residual - (f - Complex64::new(0.9, 0.0)).norm()).abs() < 1e-12);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn phase_of_free_charge_is_not_constant() {
    let ctx = context(1024, 0.5, 1.0);
    let w = noncontrollability_witness(&ctx, 1e-3).unwrap();
    assert!(w.violates_condition && w.arg_variation > 1.0);
}
