//! Rank test of the linearization, Gauss-Newton inversion of `F(alpha) = z`,
//! and the phase witness for the end-point charge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{evaluate_f, evaluate_v, jacobian, FunctionalContext, JacobianMatrix};
use crate::timebase::{ComplexSeries, ControlProfile};

/// Complex number as a JSON object `{re, im}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cplx {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cplx> for Complex64 {
    fn from(z: Cplx) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankReport {
    pub sigma1: f64,
    pub sigma2: f64,
    pub surjective: bool,
}

/// Rank decision for a given Jacobian: `sigma2 >= max(1e-8 sigma1, 1e-12)`.
pub fn rank_from_jacobian(jac: &JacobianMatrix) -> RankReport {
    let [sigma1, sigma2] = jac.singular_values();
    RankReport {
        sigma1,
        sigma2,
        surjective: sigma2 >= (1e-8 * sigma1).max(1e-12),
    }
}

/// Rank of the linearization at zero control in the first `n_basis` sine modes.
pub fn rank_check(ctx: &FunctionalContext, n_basis: usize) -> Result<RankReport> {
    let jac = jacobian(ctx, None, n_basis)?;
    Ok(rank_from_jacobian(&jac))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOptions {
    pub n_basis: usize,
    pub tol_res: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub trust_radius: f64,
    /// Upper bound on the H^1 norm of accepted iterates.
    pub h1_max: f64,
    pub continuation: bool,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            n_basis: 8,
            tol_res: 1e-8,
            max_iter: 100,
            max_halvings: 30,
            trust_radius: 0.05,
            h1_max: 1.0,
            continuation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSolution {
    pub target: Cplx,
    pub coeffs: Vec<f64>,
    pub achieved: Cplx,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sigma: [f64; 2],
    pub h1_norm: f64,
    pub within_trust_region: bool,
}

fn make_solution(
    ctx: &FunctionalContext,
    z: Complex64,
    coeffs: Vec<f64>,
    achieved: Complex64,
    iterations: usize,
    converged: bool,
    opts: &ControlOptions,
) -> Result<ControlSolution> {
    let profile = ControlProfile::new(ctx.params().horizon, coeffs.clone())?;
    let sigma = jacobian(ctx, Some(&profile), coeffs.len())?.singular_values();
    Ok(ControlSolution {
        target: z.into(),
        coeffs,
        achieved: achieved.into(),
        residual: (achieved - z).norm(),
        iterations,
        converged,
        sigma,
        h1_norm: profile.h1_norm(),
        within_trust_region: z.norm() <= opts.trust_radius,
    })
}

/// One Gauss-Newton step from `coeffs` toward `target`; returns the raw step.
pub fn gauss_newton_step(ctx: &FunctionalContext, coeffs: &[f64], target: Complex64) -> Result<Vec<f64>> {
    let profile = ControlProfile::new(ctx.params().horizon, coeffs.to_vec())?;
    let f = evaluate_f(ctx, Some(&profile))?;
    let jac = jacobian(ctx, Some(&profile), coeffs.len())?;
    let rank = rank_from_jacobian(&jac);
    if !rank.surjective {
        return Err(Error::DegenerateLinearization {
            sigma1: rank.sigma1,
            sigma2: rank.sigma2,
        });
    }
    jac.min_norm_solve(target - f)
}

/// Damped Gauss-Newton with minimum-norm steps, optionally along `r z`, `r = 1/4, 1/2, 3/4, 1`.
pub fn solve_control(ctx: &FunctionalContext, z: Complex64, opts: &ControlOptions) -> Result<ControlSolution> {
    let horizon = ctx.params().horizon;
    let n = opts.n_basis;
    if n == 0 {
        return Err(Error::Config("n_basis must be positive".into()));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("target {z} is not finite")));
    }
    let mut coeffs = vec![0.0; n];
    if z == Complex64::new(0.0, 0.0) {
        let f0 = evaluate_f(ctx, None)?;
        return make_solution(ctx, z, coeffs, f0, 0, true, opts);
    }
    let stages: Vec<f64> = if opts.continuation {
        vec![0.25, 0.5, 0.75, 1.0]
    } else {
        vec![1.0]
    };
    let mut iterations = 0;
    let mut f = evaluate_f(ctx, None)?;
    for r in stages {
        let target = z * r;
        loop {
            let res = (f - target).norm();
            if res <= opts.tol_res {
                break;
            }
            if iterations >= opts.max_iter {
                let best = make_solution(ctx, z, coeffs, f, iterations, false, opts)?;
                return Err(Error::NoConvergence(Box::new(best)));
            }
            let step = gauss_newton_step(ctx, &coeffs, target)?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let cand: Vec<f64> = coeffs.iter().zip(&step).map(|(c, s)| c + lambda * s).collect();
                let prof = ControlProfile::new(horizon, cand.clone())?;
                if prof.h1_norm() <= opts.h1_max {
                    let fc = evaluate_f(ctx, Some(&prof))?;
                    if (fc - target).norm() < res {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            iterations += 1;
            match accepted {
                Some((c, fc)) => {
                    coeffs = c;
                    f = fc;
                }
                None => {
                    let best = make_solution(ctx, z, coeffs, f, iterations, false, opts)?;
                    return Err(Error::NoConvergence(Box::new(best)));
                }
            }
        }
    }
    make_solution(ctx, z, coeffs, f, iterations, true, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessReport {
    pub arg_variation: f64,
    pub violates_condition: bool,
    pub nodes_used: usize,
}

/// Unwrapped `arg(V(0)(t) e^{-i (T - t) lambda})` on nodes where `|V(0)| >= floor`.
pub fn unwrapped_phase(v0: &ComplexSeries, lambda: f64, floor: f64) -> Vec<(f64, f64)> {
    let grid = v0.grid();
    let horizon = grid.horizon();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (j, v) in v0.values().iter().enumerate() {
        if v.norm() < floor {
            continue;
        }
        let t = grid.node(j);
        let mut theta = (v * Complex64::from_polar(1.0, -(horizon - t) * lambda)).arg();
        if let Some(&(_, prev)) = out.last() {
            let k = ((prev - theta) / std::f64::consts::TAU).round();
            theta += k * std::f64::consts::TAU;
        }
        out.push((t, theta));
    }
    out
}

/// Total variation of the phase of the free charge; constancy would force rank one.
pub fn noncontrollability_witness_from_charge(v0: &ComplexSeries, lambda: f64, tol_arg: f64) -> Result<WitnessReport> {
    let theta = unwrapped_phase(v0, lambda, 1e-12);
    if theta.is_empty() {
        return Err(Error::IndeterminatePhase("|V(0)| below 1e-12 on every node".into()));
    }
    let arg_variation: f64 = theta.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
    Ok(WitnessReport {
        arg_variation,
        violates_condition: arg_variation >= tol_arg,
        nodes_used: theta.len(),
    })
}

pub fn noncontrollability_witness(ctx: &FunctionalContext, tol_arg: f64) -> Result<WitnessReport> {
    let v0 = evaluate_v(ctx, None)?;
    noncontrollability_witness_from_charge(&v0, ctx.params().lambda(), tol_arg)
}
