//! Shared oracles for the integration tests. Deliberately independent of the
//! crate's own quadrature: composite Simpson on uniform panels.

#![allow(dead_code)]

use deltactl::Complex64;

/// Composite Simpson rule with `n` (even) intervals on [a, b].
pub fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + i as f64 * h) * w;
    }
    s * (h / 3.0)
}

pub fn simpson_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    simpson(|x| Complex64::new(f(x), 0.0), a, b, n).re
}

/// `U_t [r^2 e^{-c r^2}](r) = e^{-c r^2 / D} D^{-3/2} (6 i t / D + r^2 / D^2)`, `D = 1 + 4 i c t`.
pub fn gaussian_moment_evolved(c: f64, t: f64, r: f64) -> Complex64 {
    let d = Complex64::new(1.0, 4.0 * c * t);
    (-(c * r * r) / d).exp() * d.powf(-1.5) * (Complex64::new(0.0, 6.0 * t) / d + r * r / (d * d))
}

/// Deterministic generator for randomized checks; the seed is printed by callers.
pub fn rng(seed: u64) -> rand::rngs::StdRng {
    use rand::SeedableRng;
    rand::rngs::StdRng::seed_from_u64(seed)
}
