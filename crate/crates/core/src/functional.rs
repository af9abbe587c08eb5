//! The end-point functional `F(alpha) = (psi(T), psi_abar)` and its derivatives.
//!
//! With `V = q` the charge,
//! `F = (U_T phi, psi) + i int_0^T (U_{T-s} psi)(0) V(s) ds`.
//! `dV` is obtained by differentiating the charge equation. The linearization
//! at zero control also has a closed form, which is kept as an independent route.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagation::{overlap_freeprop_bound, trace_on_grid, PropagatedTrace};
use crate::special_kernels::{bound_origin_singular_coeff, bound_propagator_origin_regular, KernelParams};
use crate::states::RadialState;
use crate::timebase::{ComplexSeries, ControlProfile, PhysicsParams, TimeGrid};
use crate::volterra::{abel_prefactor, abel_source, abel_weights, AbelOperatorDisc, AbelWeights, KernelWeights};

/// Everything needed to evaluate `F` for many controls on a fixed grid.
#[derive(Debug)]
pub struct FunctionalContext {
    params: PhysicsParams,
    abel: AbelWeights,
    trace: PropagatedTrace,
    source: ComplexSeries,
    free_overlap: Complex64,
    end_weights: Vec<Complex64>,
    cache: RwLock<HashMap<Vec<u64>, Arc<ComplexSeries>>>,
}

fn cache_key(profile: Option<&ControlProfile>) -> Vec<u64> {
    let mut c: Vec<u64> = profile.map_or(Vec::new(), |p| p.coeffs().iter().map(|x| x.to_bits()).collect());
    while c.last().is_some_and(|&b| f64::from_bits(b) == 0.0) {
        c.pop();
    }
    c
}

fn is_zero_control(profile: Option<&ControlProfile>) -> bool {
    profile.is_none_or(ControlProfile::is_zero)
}

impl FunctionalContext {
    pub fn new(state: &RadialState, params: &PhysicsParams, grid: TimeGrid) -> Result<Self> {
        let trace = trace_on_grid(state, grid)?;
        let free_overlap = overlap_freeprop_bound(state, grid.horizon(), params)?;
        Self::from_trace(trace, free_overlap, params)
    }

    /// Context built from an origin trace and the free overlap `(U_T phi, psi)`.
    pub fn from_trace(trace: PropagatedTrace, free_overlap: Complex64, params: &PhysicsParams) -> Result<Self> {
        let grid = *trace.grid();
        if (grid.horizon() - params.horizon).abs() > 1e-12 * params.horizon {
            return Err(Error::Config("grid horizon differs from the physical horizon".into()));
        }
        let abel = abel_weights(grid);
        let source = abel_source(&trace, &abel)?;
        let kp = KernelParams::from(params);
        let kw = KernelWeights::new(&abel, bound_origin_singular_coeff(&kp), |tau| {
            bound_propagator_origin_regular(tau, &kp)
        })?;
        let n = grid.n_steps();
        let end_weights = (0..=n).map(|j| kw.weight(n, j)).collect();
        Ok(Self {
            params: *params,
            abel,
            trace,
            source,
            free_overlap,
            end_weights,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        self.abel.grid()
    }

    pub fn abel(&self) -> &AbelWeights {
        &self.abel
    }

    pub fn trace(&self) -> &PropagatedTrace {
        &self.trace
    }

    pub fn source(&self) -> &ComplexSeries {
        &self.source
    }

    pub fn free_overlap(&self) -> Complex64 {
        self.free_overlap
    }

    /// Weights `W_j` with `int_0^T (U_{T-s} psi)(0) g(s) ds ~ sum_j W_j g_j`.
    pub fn end_weights(&self) -> &[Complex64] {
        &self.end_weights
    }

    fn operator(&self, profile: Option<&ControlProfile>) -> AbelOperatorDisc {
        AbelOperatorDisc::new(self.abel.clone(), profile, &self.params)
    }

    fn check_profile(&self, profile: Option<&ControlProfile>) -> Result<()> {
        if let Some(p) = profile {
            if (p.horizon() - self.params.horizon).abs() > 1e-12 * self.params.horizon {
                return Err(Error::Domain("control horizon differs from the context horizon".into()));
            }
        }
        Ok(())
    }

    fn end_integral(&self, g: &ComplexSeries) -> Complex64 {
        g.values().iter().zip(&self.end_weights).map(|(a, b)| a * b).sum()
    }
}

/// Charge `V(alpha)` on the context grid, cached per control.
pub fn evaluate_v(ctx: &FunctionalContext, profile: Option<&ControlProfile>) -> Result<Arc<ComplexSeries>> {
    ctx.check_profile(profile)?;
    let key = cache_key(profile);
    if let Some(v) = ctx.cache.read().unwrap().get(&key) {
        return Ok(Arc::clone(v));
    }
    let q = Arc::new(ctx.operator(profile).solve(&ctx.source)?);
    let mut cache = ctx.cache.write().unwrap();
    Ok(Arc::clone(cache.entry(key).or_insert(q)))
}

pub fn evaluate_f(ctx: &FunctionalContext, profile: Option<&ControlProfile>) -> Result<Complex64> {
    let v = evaluate_v(ctx, profile)?;
    Ok(ctx.free_overlap + Complex64::i() * ctx.end_integral(&v))
}

/// Directional derivative of `V` at `alpha` along `u`.
///
/// `dV + K_alpha dV = -4 sqrt(pi i) int_0^t u(s) V(s) / sqrt(t - s) ds`.
pub fn gateaux_dv(
    ctx: &FunctionalContext,
    profile: Option<&ControlProfile>,
    direction: &ControlProfile,
) -> Result<ComplexSeries> {
    ctx.check_profile(Some(direction))?;
    let v = evaluate_v(ctx, profile)?;
    let grid = *ctx.grid();
    let uv: Vec<Complex64> = v
        .values()
        .iter()
        .zip(direction.sample(&grid))
        .map(|(v, u)| v * u)
        .collect();
    let pre = -abel_prefactor();
    let rhs = (0..grid.len())
        .into_par_iter()
        .map(|n| pre * ctx.abel.apply(n, &uv))
        .collect();
    ctx.operator(profile).solve(&ComplexSeries::new(grid, rhs)?)
}

pub fn gateaux_df(
    ctx: &FunctionalContext,
    profile: Option<&ControlProfile>,
    direction: &ControlProfile,
) -> Result<Complex64> {
    let dv = gateaux_dv(ctx, profile, direction)?;
    Ok(Complex64::i() * ctx.end_integral(&dv))
}

/// `d_0 F(u) = -4 pi i sqrt(2|abar|) int_0^T V(0)(t) u(t) e^{-i (T - t) lambda} dt`.
pub fn d0f_closed(ctx: &FunctionalContext, direction: &ControlProfile) -> Result<Complex64> {
    ctx.check_profile(Some(direction))?;
    let v0 = evaluate_v(ctx, None)?;
    let grid = *ctx.grid();
    let horizon = grid.horizon();
    let lambda = ctx.params.lambda();
    let u = direction.sample(&grid);
    let h = grid.step();
    let n = grid.n_steps();
    let integral: Complex64 = (0..=n)
        .map(|j| {
            let w = if j == 0 || j == n { 0.5 * h } else { h };
            v0.values()[j] * u[j] * Complex64::from_polar(w, -(horizon - grid.node(j)) * lambda)
        })
        .sum();
    let pre = Complex64::new(0.0, -4.0 * PI * (2.0 * ctx.params.alpha_bar.abs()).sqrt());
    Ok(pre * integral)
}

/// Real 2 x n Jacobian of `F` with respect to the sine coefficients (rows: Re, Im).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianMatrix {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl JacobianMatrix {
    pub fn from_columns(cols: &[Complex64]) -> Self {
        Self {
            re: cols.iter().map(|c| c.re).collect(),
            im: cols.iter().map(|c| c.im).collect(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.re.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n_cols();
        DMatrix::from_fn(2, n, |i, j| if i == 0 { self.re[j] } else { self.im[j] })
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> [f64; 2] {
        let sv = self.matrix().singular_values();
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v.resize(2, 0.0);
        [v[0], v[1]]
    }

    /// Minimum-norm solution of `J x = (re, im)`.
    pub fn min_norm_solve(&self, rhs: Complex64) -> Result<Vec<f64>> {
        let m = self.matrix();
        let b = DVector::from_column_slice(&[rhs.re, rhs.im]);
        let svd = m.svd(true, true);
        let x = svd.solve(&b, 1e-300).map_err(|e| Error::Fit(e.to_string()))?;
        Ok(x.iter().copied().collect())
    }
}

/// Jacobian at `profile`; at zero control the closed-form linearization is used.
pub fn jacobian(ctx: &FunctionalContext, profile: Option<&ControlProfile>, n_basis: usize) -> Result<JacobianMatrix> {
    let horizon = ctx.params.horizon;
    let at_zero = is_zero_control(profile);
    evaluate_v(ctx, profile)?;
    let cols = (1..=n_basis)
        .into_par_iter()
        .map(|k| {
            let e = ControlProfile::basis(horizon, n_basis, k)?;
            if at_zero {
                d0f_closed(ctx, &e)
            } else {
                gateaux_df(ctx, profile, &e)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JacobianMatrix::from_columns(&cols))
}

/// Serializable summary of one evaluation of `F`.
#[derive(Debug, Clone, Serialize)]
pub struct FReport {
    pub control_coeffs: Vec<f64>,
    pub f_re: f64,
    pub f_im: f64,
    pub f_abs: f64,
    pub jacobian: Option<JacobianMatrix>,
    pub singular_values: Option<[f64; 2]>,
}

impl FReport {
    pub fn new(profile: Option<&ControlProfile>, f: Complex64, jac: Option<JacobianMatrix>) -> Self {
        let singular_values = jac.as_ref().map(JacobianMatrix::singular_values);
        Self {
            control_coeffs: profile.map_or(Vec::new(), |p| p.coeffs().to_vec()),
            f_re: f.re,
            f_im: f.im,
            f_abs: f.norm(),
            jacobian: jac,
            singular_values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::make_initial_state;

    fn ctx(n: usize) -> FunctionalContext {
        let p = PhysicsParams::new(-0.25, 1.0).unwrap();
        let s = make_initial_state(0.5, 1.0, &p).unwrap();
        FunctionalContext::new(&s, &p, TimeGrid::new(1.0, n).unwrap()).unwrap()
    }

    #[test]
    fn f_at_zero_is_small() {
        let c = ctx(512);
        assert!(evaluate_f(&c, None).unwrap().norm() < 1e-5);
    }

    #[test]
    fn zero_control_with_explicit_coefficients_shares_cache() {
        let c = ctx(64);
        let z = ControlProfile::zero(1.0, 4).unwrap();
        let a = evaluate_v(&c, None).unwrap();
        let b = evaluate_v(&c, Some(&z)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn gateaux_is_linear_in_direction() {
        let c = ctx(128);
        let u = ControlProfile::new(1.0, vec![0.3, -0.1]).unwrap();
        let u2 = ControlProfile::new(1.0, vec![0.6, -0.2]).unwrap();
        let a = gateaux_df(&c, None, &u).unwrap();
        let b = gateaux_df(&c, None, &u2).unwrap();
        assert!((b - a * 2.0).norm() < 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn mismatched_horizon_rejected() {
        let c = ctx(32);
        let u = ControlProfile::new(2.0, vec![1.0]).unwrap();
        assert!(gateaux_df(&c, None, &u).is_err());
    }

    #[test]
    fn jacobian_shape() {
        let c = ctx(64);
        let j = jacobian(&c, None, 3).unwrap();
        assert_eq!(j.n_cols(), 3);
        let [s1, s2] = j.singular_values();
        assert!(s1 >= s2 && s2 >= 0.0);
    }
}
