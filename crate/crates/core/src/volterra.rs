//! Abel-type Volterra equation for the charge.
//!
//! The charge solves `q + K q = f` with
//! `K q(t) = int_0^t kappa(s) q(s) / sqrt(t - s) ds`, `kappa = 4 sqrt(pi i) (alpha + abar)`,
//! and `f(t) = 4 sqrt(pi i) int_0^t (U_s phi)(0) / sqrt(t - s) ds`.
//!
//! Discretization is product integration. The data is interpolated linearly
//! between grid nodes and integrated exactly against the weakly singular factor.
//! This leaves a lower-triangular system that is solved by forward substitution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::PropagatedTrace;
use crate::quad::gl16;
use crate::special_kernels::{kernel_g_regular, kernel_g_sqrt_coeff, sqrt_i, KernelParams};
use crate::timebase::{ComplexSeries, ControlProfile, PhysicsParams, TimeGrid};

/// `4 sqrt(pi i)`.
pub fn abel_prefactor() -> Complex64 {
    sqrt_i() * 4.0 * PI.sqrt()
}

/// Product-integration weights for the kernel `(t - s)^{-1/2}`.
///
/// `left[p - 1]` multiplies the node at distance `p h` (far end of panel `p`),
/// `right[p - 1]` the node at distance `(p - 1) h` (near end).
#[derive(Debug, Clone, PartialEq)]
pub struct AbelWeights {
    grid: TimeGrid,
    left: Vec<f64>,
    right: Vec<f64>,
}

pub fn abel_weights(grid: TimeGrid) -> AbelWeights {
    let sh = grid.step().sqrt();
    let n = grid.n_steps();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for p in 1..=n {
        let s = (p as f64).sqrt();
        let r = ((p - 1) as f64).sqrt();
        let d = (s + r) * (s + r);
        left.push(sh * (2.0 / 3.0) * (s + 2.0 * r) / d);
        right.push(sh * (2.0 / 3.0) * (2.0 * s + r) / d);
    }
    AbelWeights { grid, left, right }
}

impl AbelWeights {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Weight of node `j` in the quadrature of `int_0^{t_n} g(s) (t_n - s)^{-1/2} ds`.
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        assert!(j <= n && n <= self.grid.n_steps());
        if n == 0 {
            return 0.0;
        }
        let d = n - j;
        let far = if d >= 1 { self.left[d - 1] } else { 0.0 };
        let near = if d < n { self.right[d] } else { 0.0 };
        far + near
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|j| self.weight(n, j)).collect()
    }

    /// `sum_j w_{n,j} g_j`.
    pub fn apply(&self, n: usize, g: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, gj) in g.iter().enumerate().take(n + 1) {
            acc += *gj * self.weight(n, j);
        }
        acc
    }
}

/// Product-integration weights for a kernel `c / sqrt(tau) + K_reg(tau)` with
/// `K_reg` continuous on `[0, T]`.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    grid: TimeGrid,
    left: Vec<Complex64>,
    right: Vec<Complex64>,
}

impl KernelWeights {
    pub fn new<F>(abel: &AbelWeights, singular: Complex64, regular: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64> + Sync,
    {
        let grid = abel.grid;
        let h = grid.step();
        let rule = gl16();
        let moments = (1..=grid.n_steps())
            .into_par_iter()
            .map(|p| {
                let lo = (p - 1) as f64 * h;
                let mut far = Complex64::new(0.0, 0.0);
                let mut near = Complex64::new(0.0, 0.0);
                if p == 1 {
                    // tau = u^2 removes the sqrt(tau) behavior of the regular part.
                    let half = 0.5 * h.sqrt();
                    for &(x, w) in rule {
                        let u = half * (x + 1.0);
                        let tau = u * u;
                        let k = regular(tau)? * (w * half * 2.0 * u);
                        far += k * (tau / h);
                        near += k * ((h - tau) / h);
                    }
                } else {
                    let half = 0.5 * h;
                    for &(x, w) in rule {
                        let tau = lo + half * (x + 1.0);
                        let k = regular(tau)? * (w * half);
                        far += k * ((tau - lo) / h);
                        near += k * ((lo + h - tau) / h);
                    }
                }
                Ok((
                    far + singular * abel.left[p - 1],
                    near + singular * abel.right[p - 1],
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let (left, right) = moments.into_iter().unzip();
        Ok(Self { grid, left, right })
    }

    pub fn weight(&self, n: usize, j: usize) -> Complex64 {
        assert!(j <= n && n <= self.grid.n_steps());
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let d = n - j;
        let far = if d >= 1 { self.left[d - 1] } else { Complex64::new(0.0, 0.0) };
        let near = if d < n { self.right[d] } else { Complex64::new(0.0, 0.0) };
        far + near
    }

    pub fn apply(&self, n: usize, g: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, gj) in g.iter().enumerate().take(n + 1) {
            acc += *gj * self.weight(n, j);
        }
        acc
    }
}

/// `f_n = 4 sqrt(pi i) int_0^{t_n} h(s) / sqrt(t_n - s) ds` for an origin trace.
///
/// The `c / sqrt(s)` and `d sqrt(s)` components contribute `c pi` and `d pi t / 2`
/// exactly; at `t = 0` the limit value is used.
pub fn abel_source(trace: &PropagatedTrace, abel: &AbelWeights) -> Result<ComplexSeries> {
    let grid = *trace.grid();
    if grid != abel.grid {
        return Err(Error::Domain("trace and weights live on different grids".into()));
    }
    let reg = trace.regular().values();
    let c = trace.inv_sqrt_coeff();
    let d = trace.sqrt_coeff();
    let pre = abel_prefactor();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|n| pre * (abel.apply(n, reg) + c * PI + d * (0.5 * PI * grid.node(n))))
        .collect();
    ComplexSeries::new(grid, values)
}

/// `4 pi sqrt(i) int_0^t G(t - s) h(s) ds` by product integration.
pub fn convolve_with_g(trace: &PropagatedTrace, params: &PhysicsParams, abel: &AbelWeights) -> Result<ComplexSeries> {
    let grid = *trace.grid();
    if grid != abel.grid {
        return Err(Error::Domain("trace and weights live on different grids".into()));
    }
    let kp = KernelParams::from(params);
    let c_g = Complex64::new(1.0 / PI.sqrt(), 0.0);
    let d_g = kernel_g_sqrt_coeff(&kp);
    let wg = KernelWeights::new(abel, c_g, |tau| kernel_g_regular(tau, &kp))?;
    let g_rem = grid
        .nodes()
        .into_iter()
        .map(|t| Ok(kernel_g_regular(t, &kp)? - d_g * t.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let data: Vec<Complex64> = (0..grid.len()).map(|j| trace.nonsingular_value(j)).collect();
    let c_h = trace.inv_sqrt_coeff();
    let pre = sqrt_i() * 4.0 * PI;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let mut v = wg.apply(n, &data);
            if c_h != Complex64::new(0.0, 0.0) {
                // c_h / sqrt(s) against G(t - s), with the singular parts of G done exactly.
                let t = grid.node(n);
                v += c_h * (c_g * PI + d_g * (0.5 * PI * t) + abel.apply(n, &g_rem));
            }
            pre * v
        })
        .collect();
    ComplexSeries::new(grid, values)
}

/// Discretized operator `I + K` for a given control.
#[derive(Debug, Clone)]
pub struct AbelOperatorDisc {
    weights: AbelWeights,
    kappa: Vec<Complex64>,
}

impl AbelOperatorDisc {
    pub fn new(weights: AbelWeights, profile: Option<&ControlProfile>, params: &PhysicsParams) -> Self {
        let grid = weights.grid;
        let pre = abel_prefactor();
        let kappa = grid
            .nodes()
            .into_iter()
            .map(|t| {
                let a = profile.map_or(0.0, |p| p.value(t));
                pre * (a + params.alpha_bar)
            })
            .collect();
        Self { weights, kappa }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.weights.grid
    }

    pub fn weights(&self) -> &AbelWeights {
        &self.weights
    }

    pub fn kappa(&self) -> &[Complex64] {
        &self.kappa
    }

    /// `(K q)_n = sum_{j <= n} w_{n,j} kappa_j q_j`.
    pub fn apply_k(&self, q: &ComplexSeries) -> Result<ComplexSeries> {
        if q.grid() != self.grid() {
            return Err(Error::Domain("series and operator live on different grids".into()));
        }
        let kq: Vec<Complex64> = q.values().iter().zip(&self.kappa).map(|(a, b)| a * b).collect();
        let values = (0..kq.len())
            .into_par_iter()
            .map(|n| self.weights.apply(n, &kq))
            .collect();
        ComplexSeries::new(*self.grid(), values)
    }

    /// Forward substitution for `q + K q = f`.
    pub fn solve(&self, f: &ComplexSeries) -> Result<ComplexSeries> {
        if f.grid() != self.grid() {
            return Err(Error::Domain("source and operator live on different grids".into()));
        }
        let n_nodes = f.len();
        let fv = f.values();
        let mut kq = vec![Complex64::new(0.0, 0.0); n_nodes];
        let mut q = vec![Complex64::new(0.0, 0.0); n_nodes];
        let w = &self.weights;
        for n in 0..n_nodes {
            let mut acc = fv[n];
            if n > 0 {
                for (j, v) in kq.iter().enumerate().take(n) {
                    acc -= *v * w.weight(n, j);
                }
            }
            let diag = Complex64::new(1.0, 0.0) + self.kappa[n] * w.weight(n, n);
            if diag.norm() < 1e-10 {
                return Err(Error::Conditioning { step: n, magnitude: diag.norm() });
            }
            q[n] = acc / diag;
            kq[n] = q[n] * self.kappa[n];
        }
        ComplexSeries::new(*self.grid(), q)
    }

    /// `max_n |q_n + (K q)_n - f_n|`.
    pub fn residual(&self, q: &ComplexSeries, f: &ComplexSeries) -> Result<f64> {
        let kq = self.apply_k(q)?;
        let lhs = q.checked_add(&kq)?;
        lhs.max_distance(f)
    }
}

/// Solve the charge equation on `abel.grid()` for the given control.
pub fn solve_charge(
    profile: Option<&ControlProfile>,
    source: &ComplexSeries,
    params: &PhysicsParams,
    abel: &AbelWeights,
) -> Result<ComplexSeries> {
    AbelOperatorDisc::new(abel.clone(), profile, params).solve(source)
}

/// Truncated Neumann series `sum_{n <= N} (-K)^n f`.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub charge: ComplexSeries,
    /// Sup norm of each term `(-K)^n f`.
    pub term_norms: Vec<f64>,
    /// Bound on the sup norm of the omitted terms.
    pub tail_bound: f64,
}

pub fn picard_series(
    op: &AbelOperatorDisc,
    source: &ComplexSeries,
    n_terms: usize,
    coupling_sup: f64,
) -> Result<PicardResult> {
    let mut term = source.clone();
    let mut sum = source.clone();
    let mut norms = vec![term.sup_norm()];
    for _ in 0..n_terms {
        term = op.apply_k(&term)?.scale(Complex64::new(-1.0, 0.0));
        sum = sum.checked_add(&term)?;
        norms.push(term.sup_norm());
    }
    let horizon = op.grid().horizon();
    let tail = neumann_terms(coupling_sup, horizon, 4000)
        .into_iter()
        .skip(n_terms + 1)
        .sum::<f64>();
    Ok(PicardResult {
        charge: sum,
        term_norms: norms,
        tail_bound: tail * source.sup_norm(),
    })
}

/// `A_n`, the constant of the n-fold iterated Abel kernel bound.
///
/// `A_n = 1 / (n/2)!` for even `n` and `2^{(n+1)/2} / (sqrt(pi) n!!)` for odd `n`.
pub fn iterated_abel_constant(n: usize) -> f64 {
    ln_iterated_abel_constant(n).exp()
}

fn ln_iterated_abel_constant(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        -(1..=n / 2).map(|k| (k as f64).ln()).sum::<f64>()
    } else {
        let ln_double_fact: f64 = (1..=n).step_by(2).map(|k| (k as f64).ln()).sum();
        0.5 * (n + 1) as f64 * 2f64.ln() - 0.5 * PI.ln() - ln_double_fact
    }
}

/// Terms `x_n = (4 sqrt(pi) s)^n A_n pi^{n/2} T^{n/2}`, `n = 0..max`, with `s = sup |alpha + abar|`.
pub fn neumann_terms(coupling_sup: f64, horizon: f64, max_terms: usize) -> Vec<f64> {
    let ln_x = (4.0 * PI.sqrt() * coupling_sup).ln() + 0.5 * (PI * horizon).ln();
    let mut out = vec![1.0];
    for n in 1..=max_terms {
        let v = (n as f64 * ln_x + ln_iterated_abel_constant(n)).exp();
        out.push(v);
        if n > 8 && v < 1e-18 * out.iter().sum::<f64>() {
            break;
        }
    }
    out
}

/// `Gamma(T, ||alpha + abar||) = 1 + sum_{n >= 1} x_n`, the bound `||q|| <= Gamma ||f||`.
pub fn gamma_bound(coupling_sup: f64, horizon: f64) -> Result<f64> {
    if !(coupling_sup >= 0.0 && coupling_sup.is_finite() && horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain("gamma bound needs finite nonnegative inputs".into()));
    }
    if coupling_sup == 0.0 {
        return Ok(1.0);
    }
    let g: f64 = neumann_terms(coupling_sup, horizon, 100_000).iter().sum();
    if !g.is_finite() {
        return Err(Error::Domain("gamma bound overflows".into()));
    }
    Ok(g)
}

/// `sup_t |alpha(t) + abar|`.
pub fn coupling_sup_norm(profile: Option<&ControlProfile>, params: &PhysicsParams) -> f64 {
    match profile {
        None => params.alpha_bar.abs(),
        Some(p) => {
            let n = 64 * p.coeffs().len().max(1);
            (0..=n)
                .map(|i| (p.value(p.horizon() * i as f64 / n as f64) + params.alpha_bar).abs())
                .fold(0.0, f64::max)
        }
    }
}
