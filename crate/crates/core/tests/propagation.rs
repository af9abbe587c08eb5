mod common;

use std::f64::consts::PI;

use common::{gaussian_moment_evolved, simpson, simpson_real};
use deltactl::propagation::{
    free_prop_origin, free_prop_radial, overlap_freeprop_bound, radial_norm_squared, reconstruct_wavefunction,
    PropagatedTrace,
};
use deltactl::states::{make_initial_state, BoundState, RadialState};
use deltactl::timebase::{ComplexSeries, PhysicsParams, TimeGrid};
use deltactl::volterra::{abel_source, abel_weights, solve_charge};
use deltactl::Complex64;

fn default_state() -> (RadialState, PhysicsParams) {
    let p = PhysicsParams::new(-0.25, 1.0).unwrap();
    (make_initial_state(0.5, 1.0, &p).unwrap(), p)
}

fn evolved_exact(s: &RadialState, t: f64, r: f64) -> Complex64 {
    (gaussian_moment_evolved(s.a(), t, r) + gaussian_moment_evolved(s.b(), t, r) * s.beta()) * s.scale()
}

#[test]
fn radial_evolution_matches_gaussian_closed_form() {
    let (s, _) = default_state();
    for &t in &[0.05, 0.25, 1.0, 2.0] {
        for &r in &[0.1, 1.0, 2.5, 6.0] {
            let got = free_prop_radial(&s, t, r).unwrap();
            let want = evolved_exact(&s, t, r);
            assert!((got - want).norm() < 1e-10, "t = {t}, r = {r}: {got} vs {want}");
        }
    }
}

#[test]
fn origin_trace_vanishes_at_zero_and_is_bounded() {
    let (s, _) = default_state();
    assert!(free_prop_origin(&s, 0.0).unwrap().norm() < 1e-14);
    // |U_t gamma(0)| <= (2 pi)^{-3/2} int |F gamma| d^3k.
    let bound = (2.0 * PI).powf(-1.5)
        * 4.0
        * PI
        * s.momentum_nodes()
            .iter()
            .zip(s.momentum_weights())
            .zip(s.momentum_values())
            .map(|((k, w), f)| w * k * k * f.abs())
            .sum::<f64>();
    for i in 1..50 {
        assert!(free_prop_origin(&s, 0.02 * i as f64).unwrap().norm() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn initial_state_is_orthogonal_and_normalized() {
    let (s, p) = default_state();
    let psi = BoundState::new(&p);
    let r_max = s.r_max();
    let overlap = simpson_real(|r| if r > 0.0 { 4.0 * PI * r * r * s.value(r) * psi.value(r) } else { 0.0 }, 0.0, r_max, 20_000);
    assert!(overlap.abs() < 1e-10, "overlap {overlap:e}");
    let norm = simpson_real(|r| 4.0 * PI * r * r * s.value(r).powi(2), 0.0, r_max, 20_000);
    assert!((norm - 1.0).abs() < 1e-10);
    // Parseval on the momentum side.
    let k_max = s.k_max();
    let mom = simpson_real(|k| 4.0 * PI * k * k * s.radial_fourier(k).powi(2), 0.0, k_max, 4_000);
    assert!((mom - 1.0).abs() < 1e-8, "momentum norm {mom}");
}

#[test]
fn propagated_overlap_matches_position_space() {
    let (s, p) = default_state();
    let psi = BoundState::new(&p);
    let t = 0.4;
    let r_max = 40.0 / psi.mu();
    let want = simpson(
        |r| {
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            free_prop_radial(&s, t, r).unwrap() * (4.0 * PI * r * r * psi.value(r))
        },
        0.0,
        r_max,
        4_000,
    );
    let got = overlap_freeprop_bound(&s, t, &p).unwrap();
    assert!((got - want).norm() < 1e-9, "{got} vs {want}");
    assert!(overlap_freeprop_bound(&s, 0.0, &p).unwrap().norm() < 1e-10);
}

#[test]
fn free_evolution_is_unitary() {
    let (s, _) = default_state();
    let t = 0.5;
    let norm = radial_norm_squared(
        |rs| rs.iter().map(|&r| free_prop_radial(&s, t, r)).collect(),
        s.r_max() + 12.0,
        0.25,
    )
    .unwrap();
    assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
}

#[test]
fn bound_state_reconstruction_with_exact_charge() {
    let p = PhysicsParams::new(-0.25, 1.0).unwrap();
    let psi = BoundState::new(&p);
    let grid = TimeGrid::new(1.0, 2048).unwrap();
    let amp = 4.0 * PI * (2.0 * p.alpha_bar.abs()).sqrt();
    let lambda = p.lambda();
    let exact_charge = ComplexSeries::from_fn(grid, |t| Complex64::from_polar(amp, -lambda * t)).unwrap();
    let radii: Vec<f64> = (0..50).map(|i| 0.1 + 4.9 * i as f64 / 49.0).collect();
    let got = reconstruct_wavefunction(&psi, &exact_charge, 1.0, &radii).unwrap();
    let want: Vec<Complex64> = radii.iter().map(|&r| Complex64::from_polar(psi.value(r), -lambda)).collect();
    let scale = want.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    assert!(err < 1e-4, "relative error {err:e}");

    // Same with the charge from the solver.
    let trace = PropagatedTrace::bound_state(&p, grid).unwrap();
    let abel = abel_weights(grid);
    let q = solve_charge(None, &abel_source(&trace, &abel).unwrap(), &p, &abel).unwrap();
    let got = reconstruct_wavefunction(&psi, &q, 1.0, &radii).unwrap();
    let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    assert!(err < 1e-3, "relative error with solved charge {err:e}");
}

#[test]
fn reconstruction_tends_to_initial_datum() {
    let (s, _) = default_state();
    let grid = TimeGrid::new(1e-6, 4).unwrap();
    let q = ComplexSeries::zeros(grid);
    let got = reconstruct_wavefunction(&s, &q, 1e-6, &[0.5, 1.0, 2.0]).unwrap();
    for (z, r) in got.iter().zip([0.5, 1.0, 2.0]) {
        assert!((z - s.value(r)).norm() < 1e-3);
    }
}
