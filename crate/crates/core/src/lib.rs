//! Numerical realization of local exact controllability for a 3-D Schroedinger
//! equation with a point interaction of time-dependent strength `alpha(t) + abar`.
//!
//! Units: `H = -Delta`. The free kernel is `U(t, x) = (4 pi i t)^{-3/2} e^{i|x|^2/4t}`, the
//! Fourier transform is unitary, and `sqrt(i) = e^{i pi/4}`.

pub mod asymptotics;
pub mod control_synthesis;
pub mod error;
pub mod functional;
pub mod propagation;
mod quad;
pub mod special_kernels;
pub mod states;
pub mod timebase;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
