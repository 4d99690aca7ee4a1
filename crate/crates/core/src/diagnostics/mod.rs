//! Energy functional, discrete energy budget, invariant monitors and the
//! diagnostics table.

pub mod csv;
pub mod weak;

use serde::{Deserialize, Serialize};

use crate::director::{lie_derivative_from, potential_integral};
use crate::electrostatics::{apply_dielectric, PoissonSolveReport};
use crate::fields::{gradient, integrate, integrate_points, l2_norm_tensor, l2_norm_vector, laplacian, lp_norm, ScalarField, VectorField};
use crate::flow::dissipation_density_point;
use crate::kinematics::Derived;
use crate::model::{ModelParams, State};
use crate::point::{dot, norm_sq};
use crate::transport::{entropy_integral, species_dissipation_from, Species};

/// The six addends of the energy, their sum, and the budget of the step
/// that produced the state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub elastic: f64,
    pub potential_f: f64,
    pub entropy_p: f64,
    pub entropy_m: f64,
    pub electric: f64,
    pub total: f64,
    /// Dissipation rate at the step midpoint (zero for an initial state).
    pub dissipation_rate: f64,
    /// `ΔE + dt · dissipation_rate` (zero for an initial state).
    pub budget_residual: f64,
}

fn energy_with(state: &State, derived: &Derived, params: &ModelParams) -> EnergyReport {
    let eps = params.epsilon;
    let kinetic = 0.5 * l2_norm_vector(&state.v).powi(2);
    let elastic = 0.5 * l2_norm_tensor(&derived.grad_n).powi(2);
    let potential_f = potential_integral(&state.n, &params.potential);
    let entropy_p = entropy_integral(&state.c_p);
    let entropy_m = entropy_integral(&state.c_m);
    let electric = 0.5
        * integrate_points(state.grid(), |idx| {
            let g = derived.grad_phi.at(idx);
            dot(&apply_dielectric(&state.n.at(idx), eps, &g), &g)
        });
    EnergyReport {
        kinetic,
        elastic,
        potential_f,
        entropy_p,
        entropy_m,
        electric,
        total: kinetic + elastic + potential_f + entropy_p + entropy_m + electric,
        dissipation_rate: 0.0,
        budget_residual: 0.0,
    }
}

/// `E = ∫ ½|v|² + ½|∇n|² + 𝓕_λ(n) + c_p ln c_p + c_m ln c_m + ½(Id + εn⊗n)∇Φ·∇Φ`.
///
/// Requires `state.phi` to be consistent with `(n, c_p, c_m)`.
pub fn total_energy(state: &State, params: &ModelParams) -> EnergyReport {
    energy_with(state, &Derived::of(state), params)
}

/// Split of the dissipation rate into its ionic and mechanical parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dissipation {
    pub species_p: f64,
    pub species_m: f64,
    /// Integral of the Leslie dissipation form.
    pub mechanical: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.species_p + self.species_m + self.mechanical
    }
}

fn dissipation_with(state: &State, derived: &Derived, params: &ModelParams) -> Dissipation {
    let eps = params.epsilon;
    let species_p = species_dissipation_from(
        &state.c_p,
        &gradient(&state.c_p),
        &derived.grad_phi,
        &state.n,
        eps,
        Species::Positive,
    );
    let species_m = species_dissipation_from(
        &state.c_m,
        &gradient(&state.c_m),
        &derived.grad_phi,
        &state.n,
        eps,
        Species::Negative,
    );
    let ndot = lie_derivative_from(state, derived, eps, &params.potential);
    let alpha = params.leslie.alpha();
    let mechanical = integrate_points(state.grid(), |idx| {
        let (strain, _) = derived.strain_spin(idx);
        dissipation_density_point(&state.n.at(idx), &ndot.at(idx), &strain, &alpha)
    });
    Dissipation {
        species_p,
        species_m,
        mechanical,
    }
}

pub fn dissipation_breakdown(state: &State, params: &ModelParams) -> Dissipation {
    dissipation_with(state, &Derived::of(state), params)
}

/// Ionic dissipation of both species plus the integrated Leslie form.
pub fn total_dissipation(state: &State, params: &ModelParams) -> f64 {
    dissipation_breakdown(state, params).total()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub delta_e: f64,
    pub dissipation_rate: f64,
    /// `dt · dissipation_rate`
    pub dissipated: f64,
    /// `ΔE + dt · D(midpoint)`
    pub residual: f64,
}

/// Budget of one step with the dissipation evaluated at the field-wise
/// midpoint of the two states.
pub fn energy_budget(prev: &State, next: &State, dt: f64, params: &ModelParams) -> EnergyBudget {
    let e0 = total_energy(prev, params).total;
    let e1 = total_energy(next, params).total;
    budget_from(e0, e1, prev, next, dt, params)
}

pub(crate) fn budget_from(e0: f64, e1: f64, prev: &State, next: &State, dt: f64, params: &ModelParams) -> EnergyBudget {
    let rate = total_dissipation(&prev.midpoint(next), params);
    EnergyBudget {
        delta_e: e1 - e0,
        dissipation_rate: rate,
        dissipated: dt * rate,
        residual: e1 - e0 + dt * rate,
    }
}

/// Invariant monitors of one state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub step: u64,
    pub time: f64,
    pub mass_p: f64,
    pub mass_m: f64,
    pub min_cp: f64,
    pub max_cp: f64,
    pub min_cm: f64,
    pub max_cm: f64,
    pub phi_inf: f64,
    /// `‖∇Φ‖_p` for the configured exponent.
    pub grad_phi_p: f64,
    pub lap_n_2: f64,
    pub sup_n: f64,
    pub v_2: f64,
    pub grad_v_2: f64,
    pub poisson_iters: u64,
    pub poisson_residual: f64,
}

pub fn monitor_row(
    step: u64,
    state: &State,
    grad_phi_exponent: f64,
    poisson: &PoissonSolveReport,
) -> MonitorRow {
    monitor_with(step, state, &Derived::of(state), grad_phi_exponent, poisson)
}

fn monitor_with(
    step: u64,
    state: &State,
    derived: &Derived,
    grad_phi_exponent: f64,
    poisson: &PoissonSolveReport,
) -> MonitorRow {
    let grad_phi_mag = ScalarField::from_values(
        state.grid(),
        (0..state.grid().len())
            .map(|i| norm_sq(&derived.grad_phi.at(i)).sqrt())
            .collect(),
    );
    MonitorRow {
        step,
        time: state.time,
        mass_p: integrate(&state.c_p),
        mass_m: integrate(&state.c_m),
        min_cp: state.c_p.min(),
        max_cp: state.c_p.max(),
        min_cm: state.c_m.min(),
        max_cm: state.c_m.max(),
        phi_inf: state.phi.max_abs(),
        grad_phi_p: lp_norm(&grad_phi_mag, grad_phi_exponent),
        lap_n_2: l2_norm_vector(&derived.lap_n),
        sup_n: state.n.sup_norm(),
        v_2: l2_norm_vector(&state.v),
        grad_v_2: l2_norm_tensor(&derived.grad_v),
        poisson_iters: poisson.iterations as u64,
        poisson_residual: poisson.final_residual,
    }
}

/// One line of `diagnostics.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub energy: EnergyReport,
    pub monitor: MonitorRow,
}

/// Energy and monitors of a state in one pass over its derivatives.
pub fn diagnose(
    step: u64,
    state: &State,
    params: &ModelParams,
    grad_phi_exponent: f64,
    poisson: &PoissonSolveReport,
) -> DiagnosticsRow {
    let derived = Derived::of(state);
    DiagnosticsRow {
        energy: energy_with(state, &derived, params),
        monitor: monitor_with(step, state, &derived, grad_phi_exponent, poisson),
    }
}

/// `(∫|Δn|²)^{1/2}` of a director field.
pub fn laplacian_norm(n: &VectorField) -> f64 {
    l2_norm_vector(&laplacian(n))
}

/// Tolerances checked on every diagnostics row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantContract {
    pub c_bar: f64,
    pub lambda: f64,
    /// Lowest admissible density.
    pub min_density: f64,
    /// Relative overshoot admitted above `c_bar`.
    pub max_density_rel: f64,
    /// Relative drift admitted in each species' mass.
    pub mass_rel: f64,
    pub poisson_tol: f64,
}

impl InvariantContract {
    pub fn new(c_bar: f64, lambda: f64, poisson_tol: f64) -> Self {
        InvariantContract {
            c_bar,
            lambda,
            min_density: -1e-8,
            max_density_rel: 1e-6,
            mass_rel: 1e-12,
            poisson_tol,
        }
    }

    /// Violations of row `row` against the reference masses of `first`.
    pub fn violations(&self, first: &DiagnosticsRow, row: &DiagnosticsRow) -> Vec<String> {
        let m = &row.monitor;
        let mut out = Vec::new();
        let drift = |now: f64, start: f64| (now - start).abs() / start.abs().max(f64::MIN_POSITIVE);
        if drift(m.mass_p, first.monitor.mass_p) > self.mass_rel {
            out.push(format!("step {}: mass_p drifted to {:e}", m.step, m.mass_p));
        }
        if drift(m.mass_m, first.monitor.mass_m) > self.mass_rel {
            out.push(format!("step {}: mass_m drifted to {:e}", m.step, m.mass_m));
        }
        for (name, lo, hi) in [("c_p", m.min_cp, m.max_cp), ("c_m", m.min_cm, m.max_cm)] {
            if !(lo >= self.min_density) {
                out.push(format!("step {}: min {name} = {lo:e} below {:e}", m.step, self.min_density));
            }
            if !(hi <= self.c_bar * (1.0 + self.max_density_rel)) {
                out.push(format!("step {}: max {name} = {hi:e} above c_bar bound", m.step));
            }
        }
        let barrier = 1.0 + 10.0 * self.lambda;
        if !(m.sup_n <= barrier) {
            out.push(format!("step {}: sup|n| = {} exceeds {barrier}", m.step, m.sup_n));
        }
        if !(m.poisson_residual <= self.poisson_tol) {
            out.push(format!(
                "step {}: potential residual {:e} above tolerance",
                m.step, m.poisson_residual
            ));
        }
        let e = &row.energy;
        let addends = e.kinetic + e.elastic + e.potential_f + e.entropy_p + e.entropy_m + e.electric;
        if !((addends - e.total).abs() <= 1e-12 * e.total.abs().max(1.0)) || !e.total.is_finite() {
            out.push(format!("step {}: energy total inconsistent with its addends", m.step));
        }
        out
    }

    pub fn check_all(&self, rows: &[DiagnosticsRow]) -> Vec<String> {
        match rows.first() {
            None => vec!["no diagnostics rows".to_string()],
            Some(first) => rows.iter().flat_map(|r| self.violations(first, r)).collect(),
        }
    }
}
