//! The evolving state and the constants shared by every module.

use serde::{Deserialize, Serialize};

use crate::director::SingularPotential;
use crate::fields::{Grid, ScalarField, VectorField};
use crate::flow::LeslieCoefficients;

/// The quintuple `(c_p, c_m, Φ, v, n)` at one instant.
///
/// `phi` is kept consistent with `(n, c_p, c_m)` by the driver; the potential
/// equation carries no time derivative.
#[derive(Clone, Debug)]
pub struct State {
    pub time: f64,
    pub c_p: ScalarField,
    pub c_m: ScalarField,
    pub phi: ScalarField,
    pub v: VectorField,
    pub n: VectorField,
}

impl State {
    pub fn grid(&self) -> &Grid {
        self.c_p.grid()
    }

    /// Field-wise average of two states.
    pub fn midpoint(&self, other: &State) -> State {
        State {
            time: 0.5 * (self.time + other.time),
            c_p: self.c_p.midpoint(&other.c_p),
            c_m: self.c_m.midpoint(&other.c_m),
            phi: self.phi.midpoint(&other.phi),
            v: self.v.midpoint(&other.v),
            n: self.n.midpoint(&other.n),
        }
    }

    /// Named scalar components in snapshot order.
    pub fn named_components(&self) -> Vec<(String, &ScalarField)> {
        let mut out = vec![
            ("c_p".to_string(), &self.c_p),
            ("c_m".to_string(), &self.c_m),
            ("phi".to_string(), &self.phi),
        ];
        for (a, c) in self.v.components().iter().enumerate() {
            out.push((format!("v_{}", a + 1), c));
        }
        for (a, c) in self.n.components().iter().enumerate() {
            out.push((format!("n_{}", a + 1), c));
        }
        out
    }
}

/// Tolerances that decide rejection and solver accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum-principle monitoring tolerance; steps are rejected at 10x.
    pub tol_mp: f64,
    pub poisson_tol: f64,
    pub poisson_max_iter: usize,
    pub cfl_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_mp: 1e-8,
            poisson_tol: 1e-10,
            poisson_max_iter: 500,
            cfl_limit: 0.5,
        }
    }
}

/// Physical and numerical constants of a run.
#[derive(Clone, Debug)]
pub struct ModelParams {
    /// Dielectric anisotropy ε (also the mobility anisotropy).
    pub epsilon: f64,
    pub potential: SingularPotential,
    pub c_bar: f64,
    pub leslie: LeslieCoefficients,
    pub tol: Tolerances,
}

impl ModelParams {
    pub fn lambda(&self) -> f64 {
        self.potential.lambda()
    }
}
