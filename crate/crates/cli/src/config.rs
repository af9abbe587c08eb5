//! Run configuration: INI-style sections (parsed as TOML) or the equivalent JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub alpha_bar: f64,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { alpha_bar: -0.25, horizon: 1.0 }
    }
}

/// Which initial datum drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `r^2 (e^{-a r^2} + beta e^{-b r^2})`, orthogonal to the bound state.
    GaussianPair,
    /// The bound state itself; a diagnostic mode.
    Bound,
    /// Synthetic datum with vanishing origin trace.
    ZeroTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct State {
    pub a: f64,
    pub b: f64,
    pub kind: StateKind,
}

impl Default for State {
    fn default() -> Self {
        Self { a: 0.5, b: 1.0, kind: StateKind::GaussianPair }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub n_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { n_steps: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Control {
    pub n_basis: usize,
    pub trust_radius: f64,
    pub tol_res: f64,
    pub max_iter: usize,
}

impl Default for Control {
    fn default() -> Self {
        Self { n_basis: 8, trust_radius: 0.05, tol_res: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub directory: PathBuf,
    /// Extra artifacts; `"psi"` adds the wavefunction snapshot `psi_T.csv`.
    pub formats: Vec<String>,
}

impl Default for Output {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub physics: Physics,
    pub state: State,
    pub grid: Grid,
    pub control: Control,
    pub output: Output,
}

const KNOWN_FORMATS: [&str; 3] = ["csv", "json", "psi"];

impl RunConfig {
    /// Reads a `.json` file as JSON and anything else as INI-style TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let p = &self.physics;
        if !(p.alpha_bar.is_finite() && p.alpha_bar < 0.0) {
            return bad("physics.alpha_bar must be negative");
        }
        if !(p.horizon.is_finite() && p.horizon > 0.0) {
            return bad("physics.T must be positive");
        }
        if self.state.kind == StateKind::GaussianPair {
            let s = &self.state;
            if !(s.a.is_finite() && s.a > 0.0 && s.b.is_finite() && s.b > 0.0) {
                return bad("state.a and state.b must be positive");
            }
        }
        if self.grid.n_steps < 64 {
            return bad("grid.n_steps must be at least 64");
        }
        let c = &self.control;
        if c.n_basis < 2 {
            return bad("control.n_basis must be at least 2");
        }
        if !(c.tol_res > 0.0 && c.trust_radius > 0.0) {
            return bad("control tolerances must be positive");
        }
        if c.max_iter == 0 {
            return bad("control.max_iter must be positive");
        }
        if let Some(f) = self.output.formats.iter().find(|f| !KNOWN_FORMATS.contains(&f.as_str())) {
            return Err(CliError::Config(format!("unknown output format {f:?}")));
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
