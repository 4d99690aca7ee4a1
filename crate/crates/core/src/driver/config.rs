//! Run configuration, read from a flat TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::director::SingularPotential;
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::flow::LeslieCoefficients;
use crate::model::{ModelParams, Tolerances};

/// Everything that determines a run. Unknown keys are rejected so that a
/// misspelt option cannot silently fall back to its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dim: usize,
    /// Grid points per axis.
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub c_bar: f64,
    pub alpha: [f64; 6],
    pub preset: String,
    pub seed: u64,
    /// Write a diagnostics row every this many steps (1 = every step).
    pub diagnostics_every: u64,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: u64,
    /// Checkpoint cadence in steps; 0 disables checkpoints.
    pub checkpoint_every: u64,
    /// Exponent `p` of the `‖∇Φ‖_p` monitor.
    pub grad_phi_p: f64,
    pub tol_mp: f64,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub cfl_limit: f64,
    /// Require `α₂ = 0` and `α₃ = 1`.
    pub energy_identity_mode: bool,
    /// Warn when `‖Δn‖₂` grows beyond 100 times its initial value.
    pub h2_monitor_mode: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        let tol = Tolerances::default();
        SimConfig {
            dim: 2,
            n: 64,
            dt: 1e-3,
            t_end: 2.0,
            epsilon: 0.1,
            lambda: 1e-3,
            c_bar: 2.0,
            alpha: [0.0, 0.0, 1.0, 3.0, 0.0, 0.5],
            preset: "charged-blob".to_string(),
            seed: 0,
            diagnostics_every: 1,
            snapshot_every: 0,
            checkpoint_every: 0,
            grad_phi_p: 4.0,
            tol_mp: tol.tol_mp,
            poisson_tol: tol.poisson_tol,
            poisson_max_iter: tol.poisson_max_iter,
            cfl_limit: tol.cfl_limit,
            energy_identity_mode: false,
            h2_monitor_mode: false,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }

    /// Number of steps at the configured dt, rounded to the nearest integer.
    pub fn nominal_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_mp: self.tol_mp,
            poisson_tol: self.poisson_tol,
            poisson_max_iter: self.poisson_max_iter,
            cfl_limit: self.cfl_limit,
        }
    }

    /// Checks every static constraint and assembles the model constants.
    /// The Leslie admissibility gate runs first.
    pub fn validate(&self) -> Result<ModelParams> {
        let leslie = LeslieCoefficients::new(self.alpha)?;
        if self.energy_identity_mode && !leslie.is_energy_identity() {
            return Err(Error::InvalidConfig(format!(
                "energy_identity_mode requires alpha2 = 0 and alpha3 = 1, got alpha2 = {}, alpha3 = {}",
                self.alpha[1], self.alpha[2]
            )));
        }
        self.grid()?;
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("c_bar", self.c_bar)?;
        positive("poisson_tol", self.poisson_tol)?;
        positive("tol_mp", self.tol_mp)?;
        positive("cfl_limit", self.cfl_limit)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.grad_phi_p >= 1.0 && self.grad_phi_p.is_finite()) {
            return Err(Error::InvalidConfig(format!("grad_phi_p must be >= 1, got {}", self.grad_phi_p)));
        }
        if self.diagnostics_every == 0 {
            return Err(Error::InvalidConfig("diagnostics_every must be at least 1".into()));
        }
        if self.poisson_max_iter == 0 {
            return Err(Error::InvalidConfig("poisson_max_iter must be at least 1".into()));
        }
        let potential = SingularPotential::new(self.lambda)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(ModelParams {
            epsilon: self.epsilon,
            potential,
            c_bar: self.c_bar,
            leslie,
            tol: self.tolerances(),
        })
    }
}
