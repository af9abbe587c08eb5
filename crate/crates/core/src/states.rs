//! Initial data and the bound state of the unperturbed point interaction.
//!
//! The admissible initial state is `gamma(r) = N r^2 (e^{-a r^2} + beta e^{-b r^2})`.
//! It vanishes at the origin, and `beta` is chosen so that `gamma` is orthogonal
//! to the bound state. Its radial Fourier transform is cached on composite
//! Gauss-Legendre panels, and every momentum-space quantity uses that cache.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive, composite_gl};
use crate::timebase::PhysicsParams;

/// Width of the Gauss-Legendre panels of the momentum cache.
pub(crate) const K_PANEL: f64 = 0.05;
const RADIAL_SAMPLES: usize = 512;

/// Bound state `psi(r) = sqrt(2|abar|) e^{-mu r} / r` of eigenvalue `-mu^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub alpha_bar: f64,
}

impl BoundState {
    pub fn new(params: &PhysicsParams) -> Self {
        Self { alpha_bar: params.alpha_bar }
    }

    pub fn mu(&self) -> f64 {
        4.0 * PI * self.alpha_bar.abs()
    }

    pub fn value(&self, r: f64) -> f64 {
        (2.0 * self.alpha_bar.abs()).sqrt() * (-self.mu() * r).exp() / r
    }

    /// Radial Fourier transform `sqrt(2|abar|) sqrt(2/pi) / (k^2 + mu^2)`.
    pub fn fourier(&self, k: f64) -> f64 {
        let mu = self.mu();
        (2.0 * self.alpha_bar.abs()).sqrt() * (2.0 / PI).sqrt() / (k * k + mu * mu)
    }
}

pub fn bound_state_value(r: f64, params: &PhysicsParams) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("bound state needs r > 0, got {r}")));
    }
    Ok(BoundState::new(params).value(r))
}

/// Gaussian-pair initial state with its cached momentum representation.
#[derive(Debug, Clone)]
pub struct RadialState {
    a: f64,
    b: f64,
    beta: f64,
    scale: f64,
    alpha_bar: f64,
    r_max: f64,
    radii: Vec<f64>,
    samples: Vec<f64>,
    k_nodes: Vec<f64>,
    k_weights: Vec<f64>,
    fourier: Vec<f64>,
}

/// `int_0^inf r^6 e^{-c r^2} dr`.
fn sixth_moment(c: f64) -> f64 {
    15.0 * PI.sqrt() / (16.0 * c.powf(3.5))
}

pub fn make_initial_state(a: f64, b: f64, params: &PhysicsParams) -> Result<RadialState> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("widths must be positive, got a = {a}, b = {b}")));
    }
    if (a - b).abs() <= 1e-12 * a.max(b) {
        return Err(Error::Degenerate(format!(
            "a = b = {a} leaves no orthogonal combination"
        )));
    }
    let psi = BoundState::new(params);
    let mu = psi.mu();
    let r_max = (45.0 / a.min(b)).sqrt();
    // Overlap of r^2 e^{-c r^2} with psi, up to the common factor 4 pi sqrt(2|abar|).
    let overlap = |c: f64| adaptive(|r| r.powi(3) * (-c * r * r - mu * r).exp(), 0.0, r_max, 1e-15);
    let ia = overlap(a)?;
    let ib = overlap(b)?;
    let beta = -ia / ib;
    if !beta.is_finite() {
        return Err(Error::Config(format!("orthogonality coefficient is not finite: {beta}")));
    }
    let norm2 = 4.0
        * PI
        * (sixth_moment(2.0 * a) + 2.0 * beta * sixth_moment(a + b) + beta * beta * sixth_moment(2.0 * b));
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::Config(format!("state norm is not positive: {norm2}")));
    }
    let scale = 1.0 / norm2.sqrt();
    let mut state = RadialState {
        a,
        b,
        beta,
        scale,
        alpha_bar: params.alpha_bar,
        r_max,
        radii: Vec::new(),
        samples: Vec::new(),
        k_nodes: Vec::new(),
        k_weights: Vec::new(),
        fourier: Vec::new(),
    };
    state.radii = (0..RADIAL_SAMPLES)
        .map(|i| r_max * i as f64 / (RADIAL_SAMPLES - 1) as f64)
        .collect();
    state.samples = state.radii.iter().map(|&r| state.value(r)).collect();
    let k_max = 14.0 * a.max(b).sqrt();
    let (kn, kw) = composite_gl(0.0, k_max, K_PANEL);
    state.fourier = kn.iter().map(|&k| state.radial_fourier(k)).collect();
    state.k_nodes = kn;
    state.k_weights = kw;
    Ok(state)
}

impl RadialState {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Normalization factor applied to the raw combination.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    /// Radius beyond which the state is below 1e-18 of its scale.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn value(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.scale * r2 * ((-self.a * r2).exp() + self.beta * (-self.b * r2).exp())
    }

    pub fn radial_samples(&self) -> (&[f64], &[f64]) {
        (&self.radii, &self.samples)
    }

    pub fn momentum_nodes(&self) -> &[f64] {
        &self.k_nodes
    }

    pub fn momentum_weights(&self) -> &[f64] {
        &self.k_weights
    }

    /// Cached transform values at [`Self::momentum_nodes`].
    pub fn momentum_values(&self) -> &[f64] {
        &self.fourier
    }

    pub fn k_max(&self) -> f64 {
        self.k_nodes.last().copied().unwrap_or(0.0) + 0.5 * K_PANEL
    }

    /// Unitary radial Fourier transform,
    /// `(2 pi)^{-3/2} (4 pi / k) int_0^inf r sin(k r) gamma(r) dr`, by composite quadrature.
    pub fn radial_fourier(&self, k: f64) -> f64 {
        let width = if k > 0.0 { (1.5 / k).min(0.25) } else { 0.25 };
        let (rs, ws) = composite_gl(0.0, self.r_max, width);
        let pre = (2.0 * PI).powf(-1.5) * 4.0 * PI;
        let integral: f64 = if k == 0.0 {
            rs.iter().zip(&ws).map(|(&r, &w)| w * r * r * self.value(r)).sum()
        } else {
            rs.iter()
                .zip(&ws)
                .map(|(&r, &w)| w * r * (k * r).sin() / k * self.value(r))
                .sum()
        };
        pre * integral
    }

    /// Squared norm of the state by radial quadrature.
    pub fn norm_squared(&self) -> f64 {
        let (rs, ws) = composite_gl(0.0, self.r_max, 0.25);
        4.0 * PI * rs.iter().zip(&ws).map(|(&r, &w)| w * (r * self.value(r)).powi(2)).sum::<f64>()
    }

    /// Inner product with the bound state by radial quadrature.
    pub fn bound_overlap(&self) -> Result<f64> {
        let psi = BoundState { alpha_bar: self.alpha_bar };
        let v = adaptive(
            |r| if r == 0.0 { 0.0 } else { self.value(r) * psi.value(r) * r * r },
            0.0,
            self.r_max,
            1e-15,
        )?;
        Ok(4.0 * PI * v)
    }
}
