//! Uniform time grids, complex time series and sine-basis controls.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_j = j * T / N`, `j = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps < 1 {
            return Err(Error::Domain("grid needs at least one step".into()));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.horizon
        } else {
            j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// Index of the node equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step();
        let j = x.round();
        if j < 0.0 || j > self.n_steps as f64 || (x - j).abs() > 1e-9 {
            None
        } else {
            Some(j as usize)
        }
    }
}

/// Complex values sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "series has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite value at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn<F: FnMut(f64) -> Complex64>(grid: TimeGrid, mut f: F) -> Result<Self> {
        let values = grid.nodes().into_iter().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn checked_add(&self, other: &ComplexSeries) -> Result<ComplexSeries> {
        if self.grid != other.grid {
            return Err(Error::Domain("series live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, c: Complex64) -> ComplexSeries {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum pointwise distance to another series on the same grid.
    pub fn max_distance(&self, other: &ComplexSeries) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Domain("series live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// CSV with header `t,re,im`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im"])?;
        for (j, v) in self.values.iter().enumerate() {
            w.write_record([
                format!("{:.16e}", self.grid.node(j)),
                format!("{:.16e}", v.re),
                format!("{:.16e}", v.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a `t,re,im` CSV; the nodes must form a uniform grid starting at 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Domain("short csv record".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(e.to_string()))
            };
            ts.push(parse(0)?);
            vs.push(Complex64::new(parse(1)?, parse(2)?));
        }
        if ts.len() < 2 || ts[0] != 0.0 {
            return Err(Error::Domain("csv does not describe a grid starting at t = 0".into()));
        }
        let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
        for (j, t) in ts.iter().enumerate() {
            if (t - grid.node(j)).abs() > 1e-12 * grid.horizon() {
                return Err(Error::Domain(format!("node {j} is off the uniform grid")));
            }
        }
        Self::new(grid, vs)
    }
}

/// Control `alpha(t) = sum_k c_k sin(k pi t / T)`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProfile {
    horizon: f64,
    coeffs: Vec<f64>,
}

impl ControlProfile {
    pub fn new(horizon: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite control coefficient".into()));
        }
        Ok(Self { horizon, coeffs })
    }

    pub fn zero(horizon: f64, n: usize) -> Result<Self> {
        Self::new(horizon, vec![0.0; n])
    }

    /// The k-th basis function `sin(k pi t / T)`, 1-based.
    pub fn basis(horizon: f64, n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Domain(format!("basis index {k} outside 1..={n}")));
        }
        let mut c = vec![0.0; n];
        c[k - 1] = 1.0;
        Self::new(horizon, c)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        let w = std::f64::consts::PI * t / self.horizon;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * w).sin())
            .sum()
    }

    pub fn sample(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.nodes().into_iter().map(|t| self.value(t)).collect()
    }

    /// H^1(0, T) norm, exact for the sine basis.
    pub fn h1_norm(&self) -> f64 {
        let half = 0.5 * self.horizon;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = (k + 1) as f64 * std::f64::consts::PI / self.horizon;
                c * c * half * (1.0 + w * w)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Sup norm estimated on 64 samples per basis period.
    pub fn sup_norm(&self) -> f64 {
        let n = 64 * self.coeffs.len().max(1);
        (0..=n)
            .map(|i| self.value(self.horizon * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.horizon, coeffs)
    }
}

/// Background coupling `abar < 0` and horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub alpha_bar: f64,
    pub horizon: f64,
}

impl PhysicsParams {
    pub fn new(alpha_bar: f64, horizon: f64) -> Result<Self> {
        if !(alpha_bar.is_finite() && alpha_bar < 0.0) {
            return Err(Error::Config(format!("alpha_bar must be negative, got {alpha_bar}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { alpha_bar, horizon })
    }

    /// `mu = 4 pi |abar|`.
    pub fn mu(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.alpha_bar.abs()
    }

    /// Bound-state eigenvalue `lambda = -mu^2`.
    pub fn lambda(&self) -> f64 {
        -self.mu() * self.mu()
    }
}
