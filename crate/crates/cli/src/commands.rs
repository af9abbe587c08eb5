//! The four run modes.

use std::f64::consts::PI;
use std::path::PathBuf;

use deltactl::asymptotics::{ensure_nondegenerate, expansion_report, shifted_expansion_for_state, AsymptoticsOptions};
use deltactl::control_synthesis::{rank_check, solve_control, unwrapped_phase, ControlOptions, ControlSolution, Cplx};
use deltactl::functional::{d0f_closed, evaluate_f, evaluate_v, gateaux_df, FunctionalContext};
use deltactl::propagation::{bound_free_overlap, reconstruct_wavefunction, PropagatedTrace};
use deltactl::states::{make_initial_state, BoundState, RadialState};
use deltactl::timebase::{ControlProfile, PhysicsParams, TimeGrid};
use deltactl::volterra::{abel_source, abel_weights, convolve_with_g, solve_charge};
use deltactl::{Complex64, Error};
use serde::Serialize;

use crate::config::{RunConfig, StateKind};
use crate::output::{num, OutDir};
use crate::CliError;

/// Radii of the wavefunction snapshot.
const PSI_POINTS: usize = 200;

enum Datum {
    Pair(RadialState),
    Bound(BoundState),
    ZeroTrace,
}

struct Setup {
    cfg: RunConfig,
    params: PhysicsParams,
    datum: Datum,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let params = PhysicsParams::new(cfg.physics.alpha_bar, cfg.physics.horizon)?;
        let datum = match cfg.state.kind {
            StateKind::GaussianPair => Datum::Pair(make_initial_state(cfg.state.a, cfg.state.b, &params)?),
            StateKind::Bound => Datum::Bound(BoundState::new(&params)),
            StateKind::ZeroTrace => Datum::ZeroTrace,
        };
        Ok(Self { cfg: cfg.clone(), params, datum })
    }

    fn grid(&self, n_steps: usize) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.params.horizon, n_steps)?)
    }

    fn context(&self, n_steps: usize) -> Result<FunctionalContext, CliError> {
        let grid = self.grid(n_steps)?;
        let p = &self.params;
        let ctx = match &self.datum {
            Datum::Pair(s) => FunctionalContext::new(s, p, grid)?,
            Datum::Bound(_) => {
                FunctionalContext::from_trace(PropagatedTrace::bound_state(p, grid)?, bound_free_overlap(p, p.horizon)?, p)?
            }
            Datum::ZeroTrace => FunctionalContext::from_trace(PropagatedTrace::zero(grid), Complex64::new(0.0, 0.0), p)?,
        };
        Ok(ctx)
    }

    fn profile(&self, coeffs: Option<&[f64]>) -> Result<ControlProfile, CliError> {
        let n = self.cfg.control.n_basis;
        let c = match coeffs {
            None => vec![0.0; n],
            Some(c) if c.len() == n => c.to_vec(),
            Some(c) => {
                return Err(CliError::Config(format!("--coeffs has {} entries, control.n_basis is {n}", c.len())));
            }
        };
        Ok(ControlProfile::new(self.params.horizon, c)?)
    }

    fn out(&self, out: Option<&PathBuf>) -> Result<OutDir, CliError> {
        OutDir::create(out.unwrap_or(&self.cfg.output.directory))
    }
}

#[derive(Serialize)]
struct Summary {
    mode: StateKind,
    alpha_bar: f64,
    horizon: f64,
    n_steps: usize,
    coeffs: Vec<f64>,
    f: Cplx,
    abs_f: f64,
    /// `|F_N - F_{N/2}|`.
    error_estimate: f64,
    free_overlap: Cplx,
    charge_sup: f64,
}

pub fn simulate(cfg: &RunConfig, coeffs: Option<&[f64]>, out: Option<&PathBuf>) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let n = cfg.grid.n_steps;
    let profile = setup.profile(coeffs)?;
    let ctx = setup.context(n)?;
    let coarse = setup.context(n / 2)?;
    let charge = evaluate_v(&ctx, Some(&profile))?;
    let f = evaluate_f(&ctx, Some(&profile))?;
    let f_half = evaluate_f(&coarse, Some(&profile))?;
    let dir = setup.out(out)?;
    dir.series("charge.csv", &charge)?;
    let summary = Summary {
        mode: cfg.state.kind,
        alpha_bar: setup.params.alpha_bar,
        horizon: setup.params.horizon,
        n_steps: n,
        coeffs: profile.coeffs().to_vec(),
        f: f.into(),
        abs_f: f.norm(),
        error_estimate: (f - f_half).norm(),
        free_overlap: ctx.free_overlap().into(),
        charge_sup: charge.sup_norm(),
    };
    dir.json("summary.json", &summary)?;
    if cfg.wants("psi") {
        let t = setup.params.horizon;
        let radii = |r_max: f64| -> Vec<f64> { (1..=PSI_POINTS).map(|j| r_max * j as f64 / PSI_POINTS as f64).collect() };
        let (rs, psi) = match &setup.datum {
            Datum::Pair(s) => {
                let rs = radii(s.r_max());
                let psi = reconstruct_wavefunction(s, &charge, t, &rs)?;
                (rs, psi)
            }
            Datum::Bound(b) => {
                let rs = radii(20.0 / b.mu());
                let psi = reconstruct_wavefunction(b, &charge, t, &rs)?;
                (rs, psi)
            }
            Datum::ZeroTrace => {
                return Err(CliError::Config("zero_trace has no wavefunction to reconstruct".into()));
            }
        };
        let rows: Vec<Vec<f64>> = rs.iter().zip(&psi).map(|(&r, z)| vec![r, z.re, z.im]).collect();
        dir.csv("psi_T.csv", &["r", "re", "im"], &rows)?;
    }
    println!(
        "F = ({}, {})  |F| = {}  error estimate = {}",
        num(f.re),
        num(f.im),
        num(f.norm()),
        num(summary.error_estimate)
    );
    Ok(())
}

fn write_control(setup: &Setup, ctx: &FunctionalContext, sol: &ControlSolution, dir: &OutDir) -> Result<(), CliError> {
    dir.json("control.json", sol)?;
    let profile = ControlProfile::new(setup.params.horizon, sol.coeffs.clone())?;
    let grid = *ctx.grid();
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .into_iter()
        .zip(profile.sample(&grid))
        .map(|(t, a)| vec![t, a])
        .collect();
    dir.csv("alpha.csv", &["t", "alpha"], &rows)?;
    dir.series("charge.csv", &*evaluate_v(ctx, Some(&profile))?)?;
    Ok(())
}

pub fn control(cfg: &RunConfig, target: Complex64, out: Option<&PathBuf>) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let ctx = setup.context(cfg.grid.n_steps)?;
    let opts = ControlOptions {
        n_basis: cfg.control.n_basis,
        tol_res: cfg.control.tol_res,
        max_iter: cfg.control.max_iter,
        trust_radius: cfg.control.trust_radius,
        ..ControlOptions::default()
    };
    let rank = rank_check(&ctx, opts.n_basis)?;
    if !rank.surjective {
        return Err(Error::DegenerateLinearization { sigma1: rank.sigma1, sigma2: rank.sigma2 }.into());
    }
    let dir = setup.out(out)?;
    match solve_control(&ctx, target, &opts) {
        Ok(sol) => {
            write_control(&setup, &ctx, &sol, &dir)?;
            println!("converged in {} iterations, residual {}", sol.iterations, num(sol.residual));
            Ok(())
        }
        Err(Error::NoConvergence(best)) => {
            write_control(&setup, &ctx, &best, &dir)?;
            Err(Error::NoConvergence(best).into())
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Serialize)]
pub struct Identity {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub n_steps: usize,
}

impl Identity {
    fn new(name: &'static str, error: f64, tolerance: f64, n_steps: usize) -> Self {
        Self { name, error, tolerance, pass: error <= tolerance, n_steps }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub identities: Vec<Identity>,
    pub all_pass: bool,
}

/// Identity suite on the configured grid. The derivative ladder compares
/// Richardson-extrapolated values from `2N` and `N` steps for each route.
pub fn verify(cfg: &RunConfig, out: Option<&PathBuf>) -> Result<VerifyReport, CliError> {
    let setup = Setup::new(cfg)?;
    let p = setup.params;
    let n = cfg.grid.n_steps;
    let grid = setup.grid(n)?;
    let mu2 = p.mu() * p.mu();
    let amp = (2.0 * p.alpha_bar.abs()).sqrt();
    let exact = |t: f64| Complex64::from_polar(4.0 * PI * amp, mu2 * t);
    let mut ids = Vec::new();

    let trace = PropagatedTrace::bound_state(&p, grid)?;
    let abel = abel_weights(grid);
    let q = solve_charge(None, &abel_source(&trace, &abel)?, &p, &abel)?;
    let err = (0..grid.len())
        .map(|j| (q.values()[j] - exact(grid.node(j))).norm())
        .fold(0.0, f64::max)
        / (4.0 * PI * amp);
    ids.push(Identity::new("bound_state_charge", err, 1e-4, n));

    let conv = convolve_with_g(&trace, &p, &abel)?;
    let err = (0..grid.len())
        .filter(|&j| (0.1 * p.horizon..=0.9 * p.horizon).contains(&grid.node(j)))
        .map(|j| (conv.values()[j] - exact(grid.node(j))).norm())
        .fold(0.0, f64::max)
        / (4.0 * PI * amp);
    ids.push(Identity::new("kernel_convolution", err, 1e-3, n));

    let pair = Setup {
        datum: Datum::Pair(make_initial_state(cfg.state.a, cfg.state.b, &p)?),
        cfg: cfg.clone(),
        params: p,
    };
    let ctx = pair.context(n)?;
    ids.push(Identity::new("free_functional_vanishes", evaluate_f(&ctx, None)?.norm(), 1e-6, n));

    let fine = pair.context(2 * n)?;
    let mut gap: f64 = 0.0;
    for k in 1..=cfg.control.n_basis {
        let u = ControlProfile::basis(p.horizon, cfg.control.n_basis, k)?;
        let closed = (d0f_closed(&fine, &u)? * 4.0 - d0f_closed(&ctx, &u)?) / 3.0;
        let chain = (gateaux_df(&fine, None, &u)? * 4.0 - gateaux_df(&ctx, None, &u)?) / 3.0;
        gap = gap.max((closed - chain).norm());
    }
    ids.push(Identity::new("linearization_closed_form", gap, 1e-6, 2 * n));

    let report = VerifyReport { all_pass: ids.iter().all(|i| i.pass), identities: ids };
    setup.out(out)?.json("verify.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.into()))?);
    Ok(report)
}

pub fn asymptotics(cfg: &RunConfig, out: Option<&PathBuf>) -> Result<(), CliError> {
    let setup = Setup::new(cfg)?;
    let state = match &setup.datum {
        Datum::Pair(s) => s,
        Datum::ZeroTrace => {
            ensure_nondegenerate(&PropagatedTrace::zero(setup.grid(cfg.grid.n_steps)?))?;
            return Err(Error::DegenerateState("zero_trace carries no charge".into()).into());
        }
        Datum::Bound(_) => {
            return Err(CliError::Config("asymptotics needs an admissible (gaussian_pair) state".into()));
        }
    };
    let opts = AsymptoticsOptions::default();
    let (report, v0) = expansion_report(state, &setup.params, &opts)?;
    let shifted = shifted_expansion_for_state(state, &setup.params, setup.grid(cfg.grid.n_steps)?, &opts)?;
    let dir = setup.out(out)?;

    #[derive(Serialize)]
    struct Full<'a> {
        expansion: &'a deltactl::asymptotics::ExpansionReport,
        shifted: &'a deltactl::asymptotics::ShiftedReport,
    }
    dir.json("expansion.json", &Full { expansion: &report, shifted: &shifted })?;

    let grid = *v0.grid();
    let theta = unwrapped_phase(&v0, setup.params.lambda(), 1e-300);
    let rows: Vec<Vec<f64>> = theta
        .into_iter()
        .map(|(t, th)| {
            let j = grid.index_of(t).expect("phase nodes are grid nodes");
            vec![t.sqrt(), th, v0.values()[j].norm()]
        })
        .collect();
    dir.csv("asymptotics.csv", &["sqrt_t", "theta", "abs_v"], &rows)?;
    println!(
        "m = {}  exponent = {:.5}  amplitude ratio = {:.4}  arg slope ratio = {:.4}",
        report.m, report.charge_fit.exponent, report.charge_fit.amplitude_ratio, report.arg_fit.slope_ratio
    );
    Ok(())
}
