//! Nernst–Planck transport of the two ion densities with mobility
//! `Id + ε n⊗n`, advection by `v` and drift `±∇Φ`.
//!
//! Every transported term is written as a divergence, so the zero mode of
//! each density is untouched by a step.

use crate::electrostatics::apply_dielectric;
use crate::error::{Result, StepRejection};
use crate::fields::{
    dealias, dealiased_divergence_spectrum, gradient, integrate_points, ScalarField, VectorField,
};
use crate::model::{ModelParams, State};
use crate::point::{add, dot, scale, Vec3};

/// Floor applied to densities inside logarithms.
pub const LOG_FLOOR: f64 = 1e-14;
/// Floor applied to densities in `1/c` dissipation weights.
pub const DISSIPATION_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    /// Cations, valence +1.
    Positive,
    /// Anions, valence −1.
    Negative,
}

impl Species {
    pub fn sign(self) -> f64 {
        match self {
            Species::Positive => 1.0,
            Species::Negative => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::Positive => "c_p",
            Species::Negative => "c_m",
        }
    }
}

#[inline]
fn flux_point(c: f64, grad_c: &Vec3, grad_phi: &Vec3, n: &Vec3, eps: f64, sign: f64) -> Vec3 {
    let drive = add(grad_c, &scale(sign * c, grad_phi));
    apply_dielectric(n, eps, &drive)
}

/// `(Id + ε n⊗n)(∇c ± c∇Φ)`, dealiased.
pub fn species_flux(c: &ScalarField, phi: &ScalarField, n: &VectorField, eps: f64, species: Species) -> VectorField {
    let grad_c = gradient(c);
    let grad_phi = gradient(phi);
    let sign = species.sign();
    dealias(&VectorField::from_points(c.grid(), |idx| {
        flux_point(c.values()[idx], &grad_c.at(idx), &grad_phi.at(idx), &n.at(idx), eps, sign)
    }))
}

fn step_one(
    c: &ScalarField,
    state: &State,
    grad_phi: &VectorField,
    params: &ModelParams,
    dt: f64,
    species: Species,
) -> Result<ScalarField> {
    let grid = c.grid();
    let eps = params.epsilon;
    let sign = species.sign();
    let hat = c.to_spectral();
    let grad_c = crate::fields::gradient_of_spectrum(&hat);
    // Explicit flux: advection, anisotropic diffusion and drift. The isotropic
    // part of the diffusion is handled implicitly below.
    let flux = VectorField::from_points(grid, |idx| {
        let cv = c.values()[idx];
        let n = state.n.at(idx);
        let gc = grad_c.at(idx);
        let aniso = scale(eps * dot(&n, &gc), &n);
        let drift = apply_dielectric(&n, eps, &scale(sign * cv, &grad_phi.at(idx)));
        let adv = scale(-cv, &state.v.at(idx));
        add(&add(&aniso, &drift), &adv)
    });
    let div = dealiased_divergence_spectrum(&flux);
    let k_sq = grid.k_sq();
    let next = hat.map_modes(|k, x| (x + dt * div.coeffs()[k]) / (1.0 + dt * k_sq[k]));
    let out = next.to_physical();
    let (min, max) = (out.min(), out.max());
    let tol = params.tol.tol_mp;
    if !(min >= -10.0 * tol && max <= params.c_bar * (1.0 + 10.0 * tol)) {
        return Err(StepRejection::MaximumPrinciple {
            species: species.label(),
            min,
            max,
        }
        .into());
    }
    Ok(out)
}

/// One IMEX step for both species: backward Euler on `Δc`, forward Euler on
/// `−div(vc) + div(ε(n⊗n)∇c) ± div((Id + εn⊗n)c∇Φ)`.
pub fn step_species(state: &State, params: &ModelParams, dt: f64) -> Result<(ScalarField, ScalarField)> {
    let grad_phi = gradient(&state.phi);
    let c_p = step_one(&state.c_p, state, &grad_phi, params, dt, Species::Positive)?;
    let c_m = step_one(&state.c_m, state, &grad_phi, params, dt, Species::Negative)?;
    Ok((c_p, c_m))
}

/// `∫ c ln c`, with `c` floored at `1e-14` inside the logarithm.
pub fn entropy_integral(c: &ScalarField) -> f64 {
    integrate_points(c.grid(), |i| {
        let x = c.values()[i];
        x * x.max(LOG_FLOOR).ln()
    })
}

/// `∫ (Id + εn⊗n)(∇c ± c∇Φ)·(∇c/c ± ∇Φ)`, with `1/c` floored at `1e-10`.
pub fn species_dissipation(c: &ScalarField, phi: &ScalarField, n: &VectorField, eps: f64, species: Species) -> f64 {
    let grad_c = gradient(c);
    let grad_phi = gradient(phi);
    species_dissipation_from(c, &grad_c, &grad_phi, n, eps, species)
}

pub(crate) fn species_dissipation_from(
    c: &ScalarField,
    grad_c: &VectorField,
    grad_phi: &VectorField,
    n: &VectorField,
    eps: f64,
    species: Species,
) -> f64 {
    let sign = species.sign();
    integrate_points(c.grid(), |idx| {
        let cv = c.values()[idx];
        let gc = grad_c.at(idx);
        let gp = grad_phi.at(idx);
        let flux = flux_point(cv, &gc, &gp, &n.at(idx), eps, sign);
        let weight = add(&scale(1.0 / cv.max(DISSIPATION_FLOOR), &gc), &scale(sign, &gp));
        dot(&flux, &weight)
    })
}
