//! Small-time behavior of the free charge `V(0)`.
//!
//! If `U_t gamma(0) = a_m t^m + ...` then
//! `V(0)(t) = A_m a_m sqrt(i) t^{m+1/2} + B_m a_m sqrt(i) b0 t^{m+1} + O(t^{m+3/2})`.
//! This module computes the constants, checks the expansion by least squares on
//! a fine grid near `t = 0`, and repeats the phase check after a time shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::control_synthesis::{unwrapped_phase, Cplx};
use crate::error::{Error, Result};
use crate::propagation::{free_prop_origin, trace_on_grid, PropagatedTrace};
use crate::quad::least_squares;
use crate::special_kernels::{sqrt_i, KernelParams};
use crate::states::RadialState;
use crate::timebase::{ComplexSeries, PhysicsParams, TimeGrid};
use crate::volterra::{abel_source, abel_weights, AbelOperatorDisc};

/// Highest order searched for a nonvanishing moment.
pub const MAX_ORDER: usize = 8;

/// First `m` with a nonvanishing moment `int k^{2m+2} F gamma dk`, and
/// `a_m = sqrt(2/pi) (-i)^m / m! int k^{2m+2} F gamma dk`.
pub fn leading_order_and_coefficient(state: &RadialState) -> Result<(usize, Complex64)> {
    let mut fact = 1.0;
    for n in 0..=MAX_ORDER {
        if n > 0 {
            fact *= n as f64;
        }
        let (mut moment, mut scale) = (0.0, 0.0);
        for ((&k, &w), &f) in state
            .momentum_nodes()
            .iter()
            .zip(state.momentum_weights())
            .zip(state.momentum_values())
        {
            let kp = k.powi(2 * n as i32 + 2);
            moment += w * kp * f;
            scale += w * kp * f.abs();
        }
        if moment.abs() > 1e-10 * scale {
            let phase = Complex64::new(0.0, -1.0).powu(n as u32);
            return Ok((n, phase * (2.0 / PI).sqrt() * moment / fact));
        }
    }
    Err(Error::NoExpansionOrder { max_order: MAX_ORDER })
}

/// `B(m + 1, 1/2)` by the recurrence `B(m+1, 1/2) = B(m, 1/2) m / (m + 1/2)`.
fn beta_half(m: usize) -> f64 {
    let mut b = 2.0;
    for k in 1..=m {
        b *= k as f64 / (k as f64 + 0.5);
    }
    b
}

/// `(A_m, B_m) = (4 sqrt(pi) B(m+1, 1/2), 4 pi / (m + 1))`.
pub fn expansion_constants(m: usize) -> (f64, f64) {
    (4.0 * PI.sqrt() * beta_half(m), 4.0 * PI / (m + 1) as f64)
}

/// `c = (B_m / A_m) |b0|`.
pub fn phase_rate(m: usize, params: &PhysicsParams) -> f64 {
    let (a, b) = expansion_constants(m);
    b / a * KernelParams::from(params).b0().norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub n_nodes: usize,
}

/// Charge with zero control on `[0, t_w]`, sampled on `n_steps` steps.
///
/// The charge on `[0, t_w]` depends only on the data on `[0, t_w]`, so this
/// equals the restriction of the full-horizon charge.
pub fn smalltime_charge(
    trace_fn: &(dyn Fn(f64) -> Result<Complex64> + Sync),
    params: &PhysicsParams,
    t_w: f64,
    n_steps: usize,
) -> Result<ComplexSeries> {
    let grid = TimeGrid::new(t_w, n_steps)?;
    let values = grid.nodes().into_iter().map(trace_fn).collect::<Result<Vec<_>>>()?;
    let trace = PropagatedTrace::from_series(ComplexSeries::new(grid, values)?);
    let abel = abel_weights(grid);
    let f = abel_source(&trace, &abel)?;
    AbelOperatorDisc::new(abel, None, params).solve(&f)
}

fn window_nodes(v0: &ComplexSeries, t_lo: f64, t_hi: f64) -> Result<(Vec<f64>, Vec<Complex64>, FitWindow)> {
    let g = v0.grid();
    let (ts, vs): (Vec<f64>, Vec<Complex64>) = (0..g.len())
        .map(|j| (g.node(j), v0.values()[j]))
        .filter(|&(t, _)| t > 0.0 && t >= t_lo * (1.0 - 1e-12) && t <= t_hi * (1.0 + 1e-12))
        .unzip();
    if ts.len() < 20 {
        return Err(Error::Fit(format!(
            "window [{t_lo:e}, {t_hi:e}] holds {} nodes, need at least 20",
            ts.len()
        )));
    }
    let w = FitWindow { t_lo, t_hi, n_nodes: ts.len() };
    Ok((ts, vs, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeFit {
    pub window: FitWindow,
    /// Exponent of `|V(0)|` from the corrected log-log fit.
    pub exponent: f64,
    pub amplitude: f64,
    pub amplitude_expected: f64,
    pub amplitude_ratio: f64,
    /// Slope of the plain two-parameter log-log fit.
    pub plain_exponent: f64,
    pub loglog_rms: f64,
    pub second_term: Cplx,
    pub second_term_expected: Cplx,
    pub second_term_rel_error: f64,
}

/// Least-squares check of `|V(0)(t)| ~ |A_m a_m| t^{m+1/2}` and of the `t^{m+1}` coefficient.
///
/// `log |V|` is fitted on `{1, log t, sqrt t, t}`; the extra terms absorb the
/// relative corrections of order `sqrt t` and `t`.
pub fn fit_charge_smalltime(
    v0: &ComplexSeries,
    m: usize,
    a_m: Complex64,
    params: &PhysicsParams,
    t_lo: f64,
    t_hi: f64,
) -> Result<ChargeFit> {
    let (ts, vs, window) = window_nodes(v0, t_lo, t_hi)?;
    if vs.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::Fit("charge vanishes inside the fit window".into()));
    }
    let logv: Vec<f64> = vs.iter().map(|v| v.norm().ln()).collect();
    let ones = vec![1.0; ts.len()];
    let logt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let sq: Vec<f64> = ts.iter().map(|t| t.sqrt()).collect();
    let (corr, rms) = least_squares(&[ones.clone(), logt.clone(), sq.clone(), ts.clone()], &logv)?;
    let (plain, _) = least_squares(&[ones.clone(), logt], &logv)?;
    if rms > 1e-3 {
        return Err(Error::Fit(format!(
            "log-log residual {rms:e} on [{t_lo:e}, {t_hi:e}]; window not in the asymptotic regime"
        )));
    }
    let (a_const, b_const) = expansion_constants(m);
    let lead = a_m * sqrt_i() * a_const;
    let amplitude_expected = lead.norm();
    let amplitude = corr[0].exp();

    let p = m as f64 + 0.5;
    let rest: Vec<Complex64> = ts
        .iter()
        .zip(&vs)
        .map(|(t, v)| (v - lead * t.powf(p)) / t.powf(p + 0.5))
        .collect();
    let (re, _) = least_squares(&[ones.clone(), sq.clone()], &rest.iter().map(|z| z.re).collect::<Vec<_>>())?;
    let (im, _) = least_squares(&[ones, sq], &rest.iter().map(|z| z.im).collect::<Vec<_>>())?;
    let second = Complex64::new(re[0], im[0]);
    let second_expected = a_m * sqrt_i() * KernelParams::from(params).b0() * b_const;
    Ok(ChargeFit {
        window,
        exponent: corr[1],
        amplitude,
        amplitude_expected,
        amplitude_ratio: amplitude / amplitude_expected,
        plain_exponent: plain[1],
        loglog_rms: rms,
        second_term: second.into(),
        second_term_expected: second_expected.into(),
        second_term_rel_error: (second - second_expected).norm() / second_expected.norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgFit {
    pub window: FitWindow,
    /// Fitted coefficient of `sqrt t` in the unwrapped phase.
    pub slope: f64,
    /// `c / sqrt 2`.
    pub slope_expected: f64,
    pub slope_ratio: f64,
    /// Fitted `theta(0)` for `theta = arg(V(0) e^{-i (T - t) lambda})`.
    pub intercept: f64,
    /// `arg(a_m sqrt i) - T lambda`.
    pub intercept_expected: f64,
    /// Distance between the two intercepts modulo `2 pi`.
    pub intercept_error: f64,
    pub rms: f64,
}

fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Fit the phase of `V(0)` on `{1, sqrt t, t, t^{3/2}}`; the `sqrt t` coefficient is the
/// rate `c sin(arg b0) = c / sqrt 2`.
pub fn arg_expansion_check(
    v0: &ComplexSeries,
    m: usize,
    a_m: Complex64,
    params: &PhysicsParams,
    t_lo: f64,
    t_hi: f64,
) -> Result<ArgFit> {
    let (_, _, window) = window_nodes(v0, t_lo, t_hi)?;
    let phase = unwrapped_phase(v0, 0.0, 1e-300);
    if phase.is_empty() {
        return Err(Error::IndeterminatePhase("charge vanishes on the fit window".into()));
    }
    let pts: Vec<(f64, f64)> = phase
        .into_iter()
        .filter(|&(t, _)| t > 0.0 && t >= t_lo * (1.0 - 1e-12) && t <= t_hi * (1.0 + 1e-12))
        .collect();
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let th: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let cols = vec![
        vec![1.0; ts.len()],
        ts.iter().map(|t| t.sqrt()).collect(),
        ts.clone(),
        ts.iter().map(|t| t.powf(1.5)).collect(),
    ];
    let (coef, rms) = least_squares(&cols, &th)?;
    let horizon = params.horizon;
    let lambda = params.lambda();
    let slope_expected = phase_rate(m, params) / 2f64.sqrt();
    let intercept = coef[0] - horizon * lambda;
    let intercept_expected = (a_m * sqrt_i()).arg() - horizon * lambda;
    Ok(ArgFit {
        window,
        slope: coef[1],
        slope_expected,
        slope_ratio: coef[1] / slope_expected,
        intercept,
        intercept_expected,
        intercept_error: wrap_distance(intercept, intercept_expected),
        rms,
    })
}

/// Settings for the small-time analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsOptions {
    /// Fit horizon as a fraction of `T`; at most 0.05.
    pub window_fraction: f64,
    /// Steps of the fine grid on `[0, window_fraction T]`.
    pub n_steps: usize,
}

impl Default for AsymptoticsOptions {
    fn default() -> Self {
        Self { window_fraction: 0.01, n_steps: 1024 }
    }
}

impl AsymptoticsOptions {
    fn validate(&self) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 0.05) {
            return Err(Error::Config("window_fraction must lie in (0, 0.05]".into()));
        }
        if self.n_steps < 200 {
            return Err(Error::Config("asymptotic grid needs at least 200 steps".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub m: usize,
    pub a_m: Cplx,
    pub big_a_m: f64,
    pub big_b_m: f64,
    pub b0: Cplx,
    pub c: f64,
    pub charge_fit: ChargeFit,
    pub arg_fit: ArgFit,
    pub grid_horizon: f64,
    pub grid_steps: usize,
}

/// Full small-time analysis of the free charge of `state`.
pub fn expansion_report(state: &RadialState, params: &PhysicsParams, opts: &AsymptoticsOptions) -> Result<(ExpansionReport, ComplexSeries)> {
    opts.validate()?;
    let (m, a_m) = leading_order_and_coefficient(state)?;
    let (big_a, big_b) = expansion_constants(m);
    let t_w = opts.window_fraction * params.horizon;
    let v0 = smalltime_charge(&|t| free_prop_origin(state, t), params, t_w, opts.n_steps)?;
    let t_lo = 10.0 * v0.grid().step();
    let charge_fit = fit_charge_smalltime(&v0, m, a_m, params, t_lo, t_w)?;
    let arg_fit = arg_expansion_check(&v0, m, a_m, params, t_lo, t_w)?;
    let report = ExpansionReport {
        m,
        a_m: a_m.into(),
        big_a_m: big_a,
        big_b_m: big_b,
        b0: KernelParams::from(params).b0().into(),
        c: phase_rate(m, params),
        charge_fit,
        arg_fit,
        grid_horizon: t_w,
        grid_steps: opts.n_steps,
    };
    Ok((report, v0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedReport {
    pub t0: f64,
    pub a0: Cplx,
    /// `c0 = (B_0 / A_0) |b0|`.
    pub c0: f64,
    pub slope: f64,
    pub slope_expected: f64,
    pub slope_ratio: f64,
    pub intercept: f64,
    pub intercept_expected: f64,
    pub intercept_error: f64,
    pub window: FitWindow,
}

/// Phase expansion of the charge restarted at the first robustly nonzero point `t0`
/// of the trace: `arg V_s(tau) = arg(a0 sqrt i) + (c0 / sqrt 2) sqrt tau + O(tau)`.
pub fn shifted_expansion(
    trace_fn: &(dyn Fn(f64) -> Result<Complex64> + Sync),
    params: &PhysicsParams,
    grid: TimeGrid,
    opts: &AsymptoticsOptions,
) -> Result<ShiftedReport> {
    opts.validate()?;
    let coarse = grid.nodes().into_iter().map(trace_fn).collect::<Result<Vec<_>>>()?;
    let peak = coarse.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak < 1e-14 {
        return Err(Error::DegenerateState("origin trace vanishes on the whole grid".into()));
    }
    let j0 = (1..grid.len())
        .find(|&j| coarse[j].norm() >= 0.5 * peak)
        .ok_or_else(|| Error::DegenerateState("no robustly nonzero trace node".into()))?;
    let t0 = grid.node(j0);
    let a0 = coarse[j0];
    let tau_w = (opts.window_fraction * params.horizon).min(params.horizon - t0);
    if tau_w <= 0.0 {
        return Err(Error::DegenerateState("shift point sits at the horizon".into()));
    }
    let shifted = |tau: f64| trace_fn(t0 + tau);
    let vs = smalltime_charge(&shifted, params, tau_w, opts.n_steps)?;
    let t_lo = 10.0 * vs.grid().step();
    let (_, _, window) = window_nodes(&vs, t_lo, tau_w)?;
    let pts: Vec<(f64, f64)> = unwrapped_phase(&vs, 0.0, 1e-300)
        .into_iter()
        .filter(|&(t, _)| t >= t_lo * (1.0 - 1e-12))
        .collect();
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let th: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let cols = vec![
        vec![1.0; ts.len()],
        ts.iter().map(|t| t.sqrt()).collect(),
        ts.clone(),
        ts.iter().map(|t| t.powf(1.5)).collect(),
    ];
    let (coef, _) = least_squares(&cols, &th)?;
    let c0 = phase_rate(0, params);
    let slope_expected = c0 / 2f64.sqrt();
    let intercept_expected = (a0 * sqrt_i()).arg();
    Ok(ShiftedReport {
        t0,
        a0: a0.into(),
        c0,
        slope: coef[1],
        slope_expected,
        slope_ratio: coef[1] / slope_expected,
        intercept: coef[0],
        intercept_expected,
        intercept_error: wrap_distance(coef[0], intercept_expected),
        window,
    })
}

/// [`shifted_expansion`] for the free trace of a radial state.
pub fn shifted_expansion_for_state(
    state: &RadialState,
    params: &PhysicsParams,
    grid: TimeGrid,
    opts: &AsymptoticsOptions,
) -> Result<ShiftedReport> {
    shifted_expansion(&|t| free_prop_origin(state, t), params, grid, opts)
}

/// Rejects traces that vanish identically, which carry no s-wave charge.
pub fn ensure_nondegenerate(trace: &PropagatedTrace) -> Result<()> {
    if trace.is_regular() && trace.regular().sup_norm() < 1e-14 {
        return Err(Error::DegenerateState("origin trace vanishes on the whole grid".into()));
    }
    Ok(())
}

/// Free origin trace of a state, checked for degeneracy.
pub fn checked_trace(state: &RadialState, grid: TimeGrid) -> Result<PropagatedTrace> {
    let tr = trace_on_grid(state, grid)?;
    ensure_nondegenerate(&tr)?;
    Ok(tr)
}
