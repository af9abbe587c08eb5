//! Complex error functions, the free Schroedinger kernel and the point-interaction
//! kernels built from them.
//!
//! Conventions: `sqrt(i) = e^{i pi/4}`, `mu = 4 pi |abar|` and `b = mu sqrt(i)`.
//! Every closed form is written through `erfcx(z) = e^{z^2} erfc(z)` so that no
//! exponentially large factor is formed explicitly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::timebase::PhysicsParams;

/// Below this value of `t mu^2` the kernels switch to their two-term expansions.
const NEAR_ZERO: f64 = 1e-10;

pub(crate) fn sqrt_i() -> Complex64 {
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

/// Parameters of the resolvent kernel `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub alpha_bar: f64,
}

impl KernelParams {
    pub fn new(alpha_bar: f64) -> Result<Self> {
        if !(alpha_bar.is_finite() && alpha_bar < 0.0) {
            return Err(Error::Domain(format!("alpha_bar must be negative, got {alpha_bar}")));
        }
        Ok(Self { alpha_bar })
    }

    pub fn mu(&self) -> f64 {
        4.0 * PI * self.alpha_bar.abs()
    }

    /// `b0 = -4 pi abar sqrt(i)`.
    pub fn b0(&self) -> Complex64 {
        sqrt_i() * self.mu()
    }
}

impl From<&PhysicsParams> for KernelParams {
    fn from(p: &PhysicsParams) -> Self {
        Self { alpha_bar: p.alpha_bar }
    }
}

fn check_finite(z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite argument {z}")))
    }
}

pub fn erfc_complex(z: Complex64) -> Result<Complex64> {
    check_finite(z)?;
    Ok(z.erfc())
}

/// Scaled complementary error function `e^{z^2} erfc(z)`.
pub fn erfcx_complex(z: Complex64) -> Result<Complex64> {
    check_finite(z)?;
    Ok(z.erfcx())
}

/// `G(t) - 1/sqrt(pi t)`, continuous at `t = 0` with value `b0`.
pub fn kernel_g_regular(t: f64, p: &KernelParams) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("kernel needs t >= 0, got {t}")));
    }
    let mu = p.mu();
    let b = p.b0();
    if t * mu * mu < NEAR_ZERO {
        return Ok(b);
    }
    let phase = Complex64::from_polar(1.0, mu * mu * t);
    Ok(b * (phase * 2.0 - (b * t.sqrt()).erfcx()))
}

/// Resolvent kernel `G(t) = 1/sqrt(pi t) - beta e^{beta^2 t} erfc(beta sqrt t)`, `beta = 4 pi abar sqrt(i)`.
pub fn kernel_g(t: f64, p: &KernelParams) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("kernel G needs t > 0, got {t}")));
    }
    Ok(kernel_g_regular(t, p)? + 1.0 / (PI * t).sqrt())
}

/// Coefficient of `t^{-1/2}` in `U_t psi(0)`.
pub fn bound_origin_singular_coeff(p: &KernelParams) -> Complex64 {
    (2.0 * p.alpha_bar.abs()).sqrt() / sqrt_i() / PI.sqrt()
}

/// Coefficient of `t^{1/2}` in `U_t psi(0)`.
pub fn bound_origin_sqrt_coeff(p: &KernelParams) -> Complex64 {
    let b = p.b0();
    (2.0 * p.alpha_bar.abs()).sqrt() / sqrt_i() * b * b * (2.0 / PI.sqrt())
}

/// Coefficient of `t^{1/2}` in `G(t)`.
pub fn kernel_g_sqrt_coeff(p: &KernelParams) -> Complex64 {
    let b = p.b0();
    b * b * (2.0 / PI.sqrt())
}

/// `U_t psi(0)` minus its `t^{-1/2}` part; continuous at 0.
pub fn bound_propagator_origin_regular(t: f64, p: &KernelParams) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagator needs t >= 0, got {t}")));
    }
    let pref = (2.0 * p.alpha_bar.abs()).sqrt() / sqrt_i();
    let b = p.b0();
    if t * p.mu() * p.mu() < NEAR_ZERO {
        return Ok(-pref * b);
    }
    Ok(-pref * b * (b * t.sqrt()).erfcx())
}

/// Free evolution of the bound state evaluated at the origin, `(U_t psi)(0)`.
pub fn bound_propagator_origin(t: f64, p: &KernelParams) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("propagator needs t > 0, got {t}")));
    }
    Ok(bound_propagator_origin_regular(t, p)? + bound_origin_singular_coeff(p) / t.sqrt())
}

/// Free evolution of the bound state at radius `r > 0`, `(U_t psi)(r)`, `t > 0`.
pub fn bound_propagator_radial(t: f64, r: f64, p: &KernelParams) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite() && r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need t > 0 and r > 0, got t = {t}, r = {r}")));
    }
    let mu = p.mu();
    let st = sqrt_i() * t.sqrt();
    let base = Complex64::new(r, 0.0) / (st * 2.0);
    let wp = base + st * mu;
    let wm = base - st * mu;
    // e^{mu r} erfc(w+) and e^{-mu r} erfc(w-), both carrying the phase e^{i(r^2/4t - mu^2 t)}.
    let phase = Complex64::from_polar(1.0, r * r / (4.0 * t) - mu * mu * t);
    let plus = phase * wp.erfcx();
    let decay = (-mu * r).exp();
    let minus = if wm.re >= 0.0 {
        phase * wm.erfcx()
    } else {
        Complex64::new(2.0 * decay, 0.0) - phase * (-wm).erfcx()
    };
    let norm = (2.0 * p.alpha_bar.abs()).sqrt();
    let rot = Complex64::from_polar(1.0, mu * mu * t);
    Ok(rot * norm / r * (Complex64::new(decay, 0.0) - (minus + plus) * 0.5))
}

/// Free Schroedinger kernel `(4 pi i t)^{-3/2} e^{i r^2 / 4t}`.
pub fn free_kernel_at(t: f64, r: f64) -> Result<Complex64> {
    if t == 0.0 || !t.is_finite() || !r.is_finite() {
        return Err(Error::Domain(format!("free kernel needs t != 0, got {t}")));
    }
    let pre = Complex64::new(0.0, 4.0 * PI * t).powf(-1.5);
    Ok(pre * Complex64::from_polar(1.0, r * r / (4.0 * t)))
}

/// `E(x) = int_x^inf u^{-1/2} e^{iu} du` for `x >= 0`.
pub(crate) fn fresnel_tail_half(x: f64) -> Complex64 {
    if x.is_infinite() {
        return Complex64::new(0.0, 0.0);
    }
    let z = sqrt_i().conj() * x.sqrt();
    sqrt_i() * PI.sqrt() * Complex64::from_polar(1.0, x) * z.erfcx()
}

/// `H(x) = int_x^inf u^{-3/2} e^{iu} du` for `x > 0`.
pub(crate) fn fresnel_tail_three_halves(x: f64) -> Complex64 {
    if x.is_infinite() {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(2.0 / x.sqrt(), x) + Complex64::i() * 2.0 * fresnel_tail_half(x)
}
