//! Free evolution of radial states, origin traces and wavefunction reconstruction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::composite_gl;
use crate::special_kernels::{
    bound_origin_singular_coeff, bound_origin_sqrt_coeff, bound_propagator_origin_regular, bound_propagator_radial,
    fresnel_tail_half, fresnel_tail_three_halves, KernelParams,
};
use crate::states::{BoundState, RadialState, K_PANEL};
use crate::timebase::{ComplexSeries, PhysicsParams, TimeGrid};

/// Largest half-panel phase the 16-point momentum rule is trusted with.
const MAX_PANEL_PHASE: f64 = 6.0;

/// Radial states whose free evolution can be evaluated pointwise.
pub trait FreeEvolution {
    fn free_evolve(&self, t: f64, r: f64) -> Result<Complex64>;
}

impl FreeEvolution for RadialState {
    fn free_evolve(&self, t: f64, r: f64) -> Result<Complex64> {
        free_prop_radial(self, t, r)
    }
}

impl FreeEvolution for BoundState {
    fn free_evolve(&self, t: f64, r: f64) -> Result<Complex64> {
        if t == 0.0 {
            return Ok(Complex64::new(self.value(r), 0.0));
        }
        bound_propagator_radial(t, r, &KernelParams { alpha_bar: self.alpha_bar })
    }
}

fn check_resolved(state: &RadialState, t: f64, r: f64) -> Result<()> {
    let phase = 0.5 * K_PANEL * (2.0 * state.k_max() * t + r);
    if phase > MAX_PANEL_PHASE {
        return Err(Error::Accuracy(format!(
            "momentum cache cannot resolve t = {t}, r = {r} (panel phase {phase:.2})"
        )));
    }
    Ok(())
}

/// `(U_t gamma)(0) = sqrt(2/pi) int_0^inf k^2 F gamma(k) e^{-i k^2 t} dk`.
pub fn free_prop_origin(state: &RadialState, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("free propagation needs t >= 0, got {t}")));
    }
    check_resolved(state, t, 0.0)?;
    let sum: Complex64 = state
        .momentum_nodes()
        .iter()
        .zip(state.momentum_weights())
        .zip(state.momentum_values())
        .map(|((&k, &w), &f)| Complex64::from_polar(w * k * k * f, -k * k * t))
        .sum();
    Ok(sum * (2.0 / PI).sqrt())
}

/// `(U_t gamma)(r)` by the momentum representation.
pub fn free_prop_radial(state: &RadialState, t: f64, r: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite() && r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need t >= 0 and r >= 0, got t = {t}, r = {r}")));
    }
    check_resolved(state, t, r)?;
    let sum: Complex64 = state
        .momentum_nodes()
        .iter()
        .zip(state.momentum_weights())
        .zip(state.momentum_values())
        .map(|((&k, &w), &f)| {
            let kr = k * r;
            let sinc = if kr == 0.0 { 1.0 } else { kr.sin() / kr };
            Complex64::from_polar(w * k * k * f * sinc, -k * k * t)
        })
        .sum();
    Ok(sum * (2.0 / PI).sqrt())
}

/// `(U_t gamma)(r)` by the position-space radial reduction
/// `(r sqrt(4 pi i t))^{-1} int_0^inf y gamma(y) (-2i) e^{i(r^2+y^2)/4t} sin(r y / 2t) dy`.
pub fn free_prop_radial_position(state: &RadialState, t: f64, r: f64) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite() && r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need t > 0 and r > 0, got t = {t}, r = {r}")));
    }
    let y_max = state.r_max();
    let width = (8.0 * t / (y_max + r)).min(0.25);
    if y_max / width > 2e5 {
        return Err(Error::Accuracy(format!("radial reduction too oscillatory at t = {t}")));
    }
    let (ys, ws) = composite_gl(0.0, y_max, width);
    let sum: Complex64 = ys
        .iter()
        .zip(&ws)
        .map(|(&y, &w)| {
            Complex64::from_polar(w * y * state.value(y) * (r * y / (2.0 * t)).sin(), y * y / (4.0 * t))
        })
        .sum();
    let pre = Complex64::new(0.0, -2.0) * Complex64::from_polar(1.0, r * r / (4.0 * t))
        / (Complex64::new(0.0, 4.0 * PI * t).sqrt() * r);
    Ok(pre * sum)
}

/// `(U_t gamma, psi)` by momentum quadrature.
pub fn overlap_freeprop_bound(state: &RadialState, t: f64, params: &PhysicsParams) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("overlap needs t >= 0, got {t}")));
    }
    check_resolved(state, t, 0.0)?;
    let psi = BoundState::new(params);
    let sum: Complex64 = state
        .momentum_nodes()
        .iter()
        .zip(state.momentum_weights())
        .zip(state.momentum_values())
        .map(|((&k, &w), &f)| Complex64::from_polar(4.0 * PI * w * k * k * f * psi.fourier(k), -k * k * t))
        .sum();
    Ok(sum)
}

/// `(U_t psi, psi)` for the bound state, by radial quadrature of the closed-form propagator.
pub fn bound_free_overlap(params: &PhysicsParams, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("overlap needs t >= 0, got {t}")));
    }
    let psi = BoundState::new(params);
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let r_max = 45.0 / psi.mu();
    let (rs, ws) = composite_gl(0.0, r_max, 0.02 * r_max);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&r, &w) in rs.iter().zip(&ws) {
        acc += psi.free_evolve(t, r)? * (4.0 * PI * w * r * r * psi.value(r));
    }
    Ok(acc)
}

/// Origin trace `h(t) = c / sqrt(t) + d sqrt(t) + h_reg(t)` sampled on a grid.
///
/// Admissible states have `c = d = 0`. The bound state carries `t^{-1/2}` and
/// `t^{1/2}` terms, which the Abel quadratures integrate exactly so that only
/// the remainder `h_reg = h_0 + O(t)` is interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedTrace {
    regular: ComplexSeries,
    inv_sqrt: Complex64,
    sqrt: Complex64,
}

impl PropagatedTrace {
    pub fn new(regular: ComplexSeries, inv_sqrt: Complex64, sqrt: Complex64) -> Self {
        Self { regular, inv_sqrt, sqrt }
    }

    pub fn from_series(values: ComplexSeries) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(values, zero, zero)
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self::from_series(ComplexSeries::zeros(grid))
    }

    /// `(U_t psi)(0)` of the bound state.
    pub fn bound_state(params: &PhysicsParams, grid: TimeGrid) -> Result<Self> {
        let kp = KernelParams::from(params);
        let d = bound_origin_sqrt_coeff(&kp);
        let values = grid
            .nodes()
            .into_iter()
            .map(|t| Ok(bound_propagator_origin_regular(t, &kp)? - d * t.sqrt()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(ComplexSeries::new(grid, values)?, bound_origin_singular_coeff(&kp), d))
    }

    pub fn grid(&self) -> &TimeGrid {
        self.regular.grid()
    }

    /// The interpolated remainder `h_reg`.
    pub fn regular(&self) -> &ComplexSeries {
        &self.regular
    }

    pub fn inv_sqrt_coeff(&self) -> Complex64 {
        self.inv_sqrt
    }

    pub fn sqrt_coeff(&self) -> Complex64 {
        self.sqrt
    }

    pub fn is_regular(&self) -> bool {
        self.inv_sqrt == Complex64::new(0.0, 0.0)
    }

    /// `h(t_j) - c / sqrt(t_j)`, finite at every node.
    pub fn nonsingular_value(&self, j: usize) -> Complex64 {
        self.regular.values()[j] + self.sqrt * self.grid().node(j).sqrt()
    }

    /// Value at node `j`; infinite at `j = 0` for a singular trace.
    pub fn value(&self, j: usize) -> Complex64 {
        let v = self.nonsingular_value(j);
        if self.is_regular() {
            v
        } else {
            v + self.inv_sqrt / self.grid().node(j).sqrt()
        }
    }
}

/// Origin trace of the free evolution of `state` on every grid node.
pub fn trace_on_grid(state: &RadialState, grid: TimeGrid) -> Result<PropagatedTrace> {
    let values = grid
        .nodes()
        .into_par_iter()
        .map(|t| free_prop_origin(state, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropagatedTrace::from_series(ComplexSeries::new(grid, values)?))
}

/// `psi(t, r) = (U_t phi)(r) + i int_0^t U(t - s, r) q(s) ds` at a grid time `t`.
///
/// The charge is linear between nodes; each panel is integrated against the
/// exact kernel through closed-form Fresnel moments.
pub fn reconstruct_wavefunction<S: FreeEvolution + Sync>(
    state: &S,
    charge: &ComplexSeries,
    t: f64,
    radii: &[f64],
) -> Result<Vec<Complex64>> {
    let grid = *charge.grid();
    let n = grid
        .index_of(t)
        .ok_or_else(|| Error::Domain(format!("t = {t} is not a node of the charge grid")))?;
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Domain(format!("reconstruction needs r > 0, got {r}")));
    }
    let h = grid.step();
    let q = charge.values();
    let pre = Complex64::new(0.0, 4.0 * PI).powf(-1.5);
    radii
        .par_iter()
        .map(|&r| {
            let free = state.free_evolve(grid.node(n), r)?;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut e_prev = Complex64::new(0.0, 0.0);
            let mut h_prev = Complex64::new(0.0, 0.0);
            for p in 1..=n {
                let tau_a = (p - 1) as f64 * h;
                let tau_b = p as f64 * h;
                let u = r * r / (4.0 * tau_b);
                let e = fresnel_tail_half(u);
                let hh = fresnel_tail_three_halves(u);
                let m0 = pre * (2.0 / r) * (e - e_prev);
                let m1 = pre * (0.5 * r) * (hh - h_prev);
                let j = n - p;
                acc += q[j + 1] * (m0 * tau_b - m1) / h + q[j] * (m1 - m0 * tau_a) / h;
                e_prev = e;
                h_prev = hh;
            }
            Ok(free + Complex64::i() * acc)
        })
        .collect()
}

/// Squared L^2 norm of a radial function sampled through `f` on `(0, r_max]`.
pub fn radial_norm_squared<F: Fn(&[f64]) -> Result<Vec<Complex64>>>(f: F, r_max: f64, width: f64) -> Result<f64> {
    let (rs, ws) = composite_gl(0.0, r_max, width);
    let vals = f(&rs)?;
    Ok(4.0 * PI * rs.iter().zip(&ws).zip(&vals).map(|((r, w), v)| w * r * r * v.norm_sqr()).sum::<f64>())
}
