//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines are always printed; exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use deltactl::asymptotics::{expansion_report, AsymptoticsOptions};
use deltactl::control_synthesis::{noncontrollability_witness, rank_check, solve_control, ControlOptions};
use deltactl::functional::{d0f_closed, evaluate_f, evaluate_v, gateaux_df, FunctionalContext};
use deltactl::propagation::{radial_norm_squared, reconstruct_wavefunction, trace_on_grid, PropagatedTrace};
use deltactl::states::{make_initial_state, RadialState};
use deltactl::timebase::{ComplexSeries, ControlProfile, PhysicsParams, TimeGrid};
use deltactl::volterra::{
    abel_source, abel_weights, convolve_with_g, coupling_sup_norm, gamma_bound, picard_series, solve_charge,
    AbelOperatorDisc,
};
use deltactl::{Complex64, Result};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn default_params() -> PhysicsParams {
    PhysicsParams::new(-0.25, 1.0).unwrap()
}

fn default_state(p: &PhysicsParams) -> RadialState {
    make_initial_state(0.5, 1.0, p).unwrap()
}

fn context(p: &PhysicsParams, s: &RadialState, n: usize) -> Result<FunctionalContext> {
    FunctionalContext::new(s, p, TimeGrid::new(p.horizon, n)?)
}

/// `4 pi sqrt(2|abar|) e^{-i t lambda}` against a numerical series, relative sup error.
fn bound_charge_error(p: &PhysicsParams, q: &ComplexSeries, window: (f64, f64)) -> f64 {
    let amp = 4.0 * PI * (2.0 * p.alpha_bar.abs()).sqrt();
    let g = q.grid();
    (0..g.len())
        .filter(|&j| (window.0..=window.1).contains(&g.node(j)))
        .map(|j| (q.values()[j] - Complex64::from_polar(amp, -p.lambda() * g.node(j))).norm())
        .fold(0.0, f64::max)
        / amp
}

fn bound_charge(p: &PhysicsParams, n: usize) -> Result<ComplexSeries> {
    let grid = TimeGrid::new(p.horizon, n)?;
    let abel = abel_weights(grid);
    let trace = PropagatedTrace::bound_state(p, grid)?;
    solve_charge(None, &abel_source(&trace, &abel)?, p, &abel)
}

fn criterion_1() -> Result<Outcome> {
    let p = default_params();
    let start = Instant::now();
    let fine = bound_charge(&p, 2048)?;
    let elapsed = start.elapsed().as_secs_f64();
    let coarse = bound_charge(&p, 1024)?;
    let all = (0.0, p.horizon);
    let (e_fine, e_coarse) = (bound_charge_error(&p, &fine, all), bound_charge_error(&p, &coarse, all));
    let ratio = e_coarse / e_fine;
    outcome(
        e_fine <= 1e-4 && ratio >= 2.5 && elapsed <= 5.0,
        format!("bound-state charge: rel err {e_fine:.2e} (tol 1e-4), halving ratio {ratio:.2} (min 2.5), {elapsed:.3} s (max 5 s)"),
    )
}

fn criterion_2() -> Result<Outcome> {
    let p = default_params();
    let grid = TimeGrid::new(p.horizon, 4096)?;
    let conv = convolve_with_g(&PropagatedTrace::bound_state(&p, grid)?, &p, &abel_weights(grid))?;
    let err = bound_charge_error(&p, &conv, (0.1 * p.horizon, 0.9 * p.horizon));
    outcome(err <= 1e-3, format!("kernel convolution identity: rel err {err:.2e} on [0.1, 0.9] T (tol 1e-3)"))
}

fn criterion_3() -> Result<Outcome> {
    let p = default_params();
    let f1 = evaluate_f(&context(&p, &default_state(&p), 2048)?, None)?.norm();
    let f2 = evaluate_f(&context(&p, &make_initial_state(0.3, 0.6, &p)?, 2048)?, None)?.norm();
    outcome(
        f1 <= 1e-6 && f2 <= 1e-6,
        format!("F(0) = 0: |F| = {f1:.2e} for (a, b) = (0.5, 1), {f2:.2e} for (0.3, 0.6) (tol 1e-6)"),
    )
}

fn criterion_4() -> Result<Outcome> {
    let p = default_params();
    let s = default_state(&p);
    let n_basis = 8;
    let fine = context(&p, &s, 32768)?;
    let mut gap: f64 = 0.0;
    for k in 1..=n_basis {
        let u = ControlProfile::basis(p.horizon, n_basis, k)?;
        gap = gap.max((d0f_closed(&fine, &u)? - gateaux_df(&fine, None, &u)?).norm());
    }
    let ctx = context(&p, &s, 1024)?;
    let mut min_order = f64::INFINITY;
    for k in 1..=n_basis {
        let u = ControlProfile::basis(p.horizon, n_basis, k)?;
        let exact = gateaux_df(&ctx, None, &u)?;
        let errs: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&eps| {
                let plus = ControlProfile::new(p.horizon, u.coeffs().iter().map(|c| eps * c).collect())?;
                let minus = ControlProfile::new(p.horizon, u.coeffs().iter().map(|c| -eps * c).collect())?;
                let fd = (evaluate_f(&ctx, Some(&plus))? - evaluate_f(&ctx, Some(&minus))?) / (2.0 * eps);
                Ok((fd - exact).norm())
            })
            .collect::<Result<_>>()?;
        for w in errs.windows(2) {
            min_order = min_order.min((w[0] / w[1]).log10());
        }
    }
    outcome(
        gap <= 1e-6 && min_order >= 1.9,
        format!(
            "derivative ladder: max |d0F - dF| = {gap:.2e} over {n_basis} directions at N = 32768 (tol 1e-6), \
             min finite-difference order {min_order:.3} (min 1.9)"
        ),
    )
}

fn criterion_5() -> Result<Outcome> {
    let p = default_params();
    let start = Instant::now();
    let ctx = context(&p, &default_state(&p), 1024)?;
    let rank = rank_check(&ctx, 8)?;
    let ratio = rank.sigma2 / rank.sigma1;
    let opts = ControlOptions::default();
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let z = Complex64::from_polar(0.01, k as f64 * PI / 4.0);
        let residual = match solve_control(&ctx, z, &opts) {
            Ok(sol) => sol.residual,
            Err(deltactl::Error::NoConvergence(best)) => best.residual,
            Err(e) => return Err(e),
        };
        worst = worst.max(residual);
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        ratio >= 1e-6 && worst <= 1e-8 && elapsed <= 120.0,
        format!(
            "local surjectivity: sigma2/sigma1 = {ratio:.3} (min 1e-6), worst residual {worst:.2e} on |z| = 0.01 \
             (tol 1e-8), {elapsed:.2} s (max 120 s)"
        ),
    )
}

/// Random smooth control with `sup |alpha| <= amplitude`.
fn random_control(rng: &mut impl Rng, horizon: f64, amplitude: f64) -> Result<ControlProfile> {
    let raw: Vec<f64> = (1..=6).map(|k| rng.random_range(-1.0..1.0) / k as f64).collect();
    let prof = ControlProfile::new(horizon, raw.clone())?;
    let scale = amplitude / prof.sup_norm().max(1e-300);
    ControlProfile::new(horizon, raw.iter().map(|c| c * scale).collect())
}

fn criterion_6() -> Result<Outcome> {
    let seed = 6;
    let mut rng = common::rng(seed);

    let p = default_params();
    let grid = TimeGrid::new(p.horizon, 1024)?;
    let abel = abel_weights(grid);
    let f = abel_source(&trace_on_grid(&default_state(&p), grid)?, &abel)?;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        // |alpha + abar| <= 0.25 + 0.25.
        let prof = random_control(&mut rng, p.horizon, 0.25)?;
        let q = AbelOperatorDisc::new(abel.clone(), Some(&prof), &p).solve(&f)?;
        let gamma = gamma_bound(coupling_sup_norm(Some(&prof), &p), p.horizon)?;
        worst_ratio = worst_ratio.max(q.sup_norm() / (f.sup_norm() * gamma));
    }

    let picard_gap = |alpha_bar: f64, amplitude: f64, rng: &mut rand::rngs::StdRng| -> Result<f64> {
        let p = PhysicsParams::new(alpha_bar, 0.05)?;
        let grid = TimeGrid::new(p.horizon, 512)?;
        let abel = abel_weights(grid);
        let f = abel_source(&trace_on_grid(&make_initial_state(0.5, 1.0, &p)?, grid)?, &abel)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let prof = random_control(rng, p.horizon, amplitude)?;
            let op = AbelOperatorDisc::new(abel.clone(), Some(&prof), &p);
            let q = op.solve(&f)?;
            let pic = picard_series(&op, &f, 12, coupling_sup_norm(Some(&prof), &p))?;
            worst = worst.max(pic.charge.max_distance(&q)? / q.sup_norm());
        }
        Ok(worst)
    };
    let gap = picard_gap(-0.1, 0.05, &mut rng)?;
    let gap_default = picard_gap(-0.25, 0.05, &mut rng)?;
    outcome(
        worst_ratio <= 1.0 && gap <= 1e-8,
        format!(
            "Picard / Gamma bound: max |q| / (|f| Gamma) = {worst_ratio:.2e} (max 1) over 20 controls; \
             12-term Picard rel gap {gap:.2e} at abar = -0.1, T = 0.05 (tol 1e-8); \
             diagnostic at abar = -0.25: {gap_default:.2e}; seed {seed}"
        ),
    )
}

fn criteria_7_8() -> Result<(Outcome, Outcome)> {
    let p = default_params();
    let s = default_state(&p);
    let (rep, _) = expansion_report(&s, &p, &AsymptoticsOptions::default())?;
    let target = rep.m as f64 + 0.5;
    let fit = &rep.charge_fit;
    let o7 = Outcome {
        pass: (fit.exponent - target).abs() <= 0.05 && (fit.amplitude_ratio - 1.0).abs() <= 0.1,
        detail: format!(
            "small-time charge: m = {}, exponent {:.4} vs {target} (tol 0.05), amplitude ratio {:.4} (tol 10%)",
            rep.m, fit.exponent, fit.amplitude_ratio
        ),
    };
    let witness = noncontrollability_witness(&context(&p, &s, 1024)?, 1e-3)?;
    let o8 = Outcome {
        pass: (rep.arg_fit.slope_ratio - 1.0).abs() <= 0.1 && witness.violates_condition,
        detail: format!(
            "arg expansion: slope / (c / sqrt 2) = {:.4} (tol 10%), witness arg variation {:.3}, violates_condition = {}",
            rep.arg_fit.slope_ratio, witness.arg_variation, witness.violates_condition
        ),
    };
    Ok((o7, o8))
}

fn criterion_9() -> Result<Outcome> {
    let p = default_params();
    let s = default_state(&p);
    let ctx = context(&p, &s, 1024)?;
    let q = evaluate_v(&ctx, None)?;
    let norm2 = radial_norm_squared(|rs| reconstruct_wavefunction(&s, &q, p.horizon, rs), 40.0, 0.25)?;
    let norm = norm2.sqrt();
    outcome((norm - 1.0).abs() <= 1e-3, format!("unitarity: ||psi(T)|| = {norm:.6} (tol 1e-3)"))
}

fn criterion_10() -> Result<Outcome> {
    let p = default_params();
    let grid = TimeGrid::new(p.horizon, 512)?;
    let free = Complex64::new(0.3, -0.4);
    let ctx = FunctionalContext::from_trace(PropagatedTrace::zero(grid), free, &p)?;
    let prof = ControlProfile::new(p.horizon, vec![0.2, -0.1, 0.05])?;
    let q = evaluate_v(&ctx, Some(&prof))?;
    let exact_zero = q.values().iter().all(|v| *v == Complex64::new(0.0, 0.0));
    let f = evaluate_f(&ctx, Some(&prof))?;
    outcome(
        exact_zero && f == free,
        format!("s-wave decoupling: q identically zero = {exact_zero}, F equals the free overlap = {}", f == free),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: &str, r: Result<Outcome>| {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("[{}] {id:>2} {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report("1", criterion_1());
    report("2", criterion_2());
    report("3", criterion_3());
    report("4", criterion_4());
    report("5", criterion_5());
    report("6", criterion_6());
    match criteria_7_8() {
        Ok((o7, o8)) => {
            report("7", Ok(o7));
            report("8", Ok(o8));
        }
        Err(e) => {
            let msg = e.to_string();
            report("7", Err(e));
            report("8", Err(deltactl::Error::Fit(msg)));
        }
    }
    report("9", criterion_9());
    report("10", criterion_10());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
