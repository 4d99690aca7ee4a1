//! Incompressible momentum balance with Ericksen, Maxwell and Leslie
//! stresses, plus admissibility of the Leslie coefficients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::director::{ericksen_point, lie_derivative_from};
use crate::electrostatics::electric_stress_point;
use crate::error::{Error, Result, StepRejection};
use crate::fields::{
    leray_project_spectra, tensor_divergence_spectra, vector_gradient, ScalarField, Spectrum,
    TensorField, VectorField,
};
use crate::kinematics::Derived;
use crate::model::{ModelParams, State};
use crate::point::{contract, dot, mat_vec, norm_sq, outer, sym_skew, Mat3, Vec3, ZERO33};

/// Verdict of the coefficient admissibility scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeslieVerdict {
    pub admissible: bool,
    /// Splitting parameter for which the coercivity condition holds.
    pub delta: f64,
    /// Certified constant: the dissipation form dominates `δ′(|Dn|² + |ṅ|²)`.
    pub delta_prime: f64,
}

/// Candidate splitting parameters: `2^{-j}` and `1 − 2^{-j}`, `j = 1..=40`.
fn delta_grid() -> impl Iterator<Item = f64> {
    (1..=40).flat_map(|j| {
        let t = 0.5f64.powi(j);
        [t, 1.0 - t]
    })
}

/// Scans `δ` for `α₄ > 0` and `α₄ − |α₁| − |α₅| − |α₆| − 1/(1 − δ) > 0`.
///
/// For such `δ`, Young's inequality on `2ṅ·Dn` together with `|n| ≤ 1` gives
/// the form a lower bound `g(δ)|Dn|² + δ|ṅ|²` with `g(δ)` the left side of
/// the condition, so `δ′ = min(g(δ), δ)` is a certificate. The `δ` with the
/// largest certificate is returned.
pub fn validate_leslie(alpha: [f64; 6]) -> LeslieVerdict {
    let [a1, _, _, a4, a5, a6] = alpha;
    let mut best = LeslieVerdict {
        admissible: false,
        delta: f64::NAN,
        delta_prime: 0.0,
    };
    if !(a4 > 0.0) || alpha.iter().any(|a| !a.is_finite()) {
        return best;
    }
    for delta in delta_grid() {
        let margin = a4 - a1.abs() - a5.abs() - a6.abs() - 1.0 / (1.0 - delta);
        if margin > 0.0 {
            let cert = margin.min(delta);
            if !best.admissible || cert > best.delta_prime {
                best = LeslieVerdict {
                    admissible: true,
                    delta,
                    delta_prime: cert,
                };
            }
        }
    }
    best
}

/// Draws a random admissible configuration for the pointwise dissipation
/// form: `|n| ≤ 1`, `D` symmetric traceless, `ṅ` arbitrary, all of unit scale.
pub fn sample_dissipation_inputs<R: Rng>(rng: &mut R, dim: usize) -> (Vec3, Vec3, Mat3) {
    let mut n = [0.0; 3];
    let mut ndot = [0.0; 3];
    for a in 0..dim {
        n[a] = rng.gen_range(-1.0..1.0);
        ndot[a] = rng.gen_range(-1.0..1.0);
    }
    let r = norm_sq(&n).sqrt();
    // Radius uniform in [0, 1], with extra weight on the sphere itself.
    let target = if rng.gen_bool(0.25) { 1.0 } else { rng.gen_range(0.0..1.0) };
    if r > 0.0 {
        n = [n[0] / r * target, n[1] / r * target, n[2] / r * target];
    }
    let mut d = ZERO33;
    for i in 0..dim {
        for j in i..dim {
            let x = rng.gen_range(-1.0..1.0);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    let trace: f64 = (0..dim).map(|i| d[i][i]).sum::<f64>() / dim as f64;
    for i in 0..dim {
        d[i][i] -= trace;
    }
    (n, ndot, d)
}

/// Smallest sampled ratio `Q / (|Dn|² + |ṅ|²)` of the dissipation form.
pub fn sampled_coercivity<R: Rng>(alpha: [f64; 6], samples: usize, dim: usize, rng: &mut R) -> f64 {
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let (n, ndot, d) = sample_dissipation_inputs(rng, dim);
        let dn = mat_vec(&d, &n);
        let denom = norm_sq(&dn) + norm_sq(&ndot);
        if denom > 1e-12 {
            min_ratio = min_ratio.min(dissipation_density_point(&n, &ndot, &d, &alpha) / denom);
        }
    }
    min_ratio
}

/// Leslie coefficients `(α₁, …, α₆)` that passed the admissibility gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeslieCoefficients {
    alpha: [f64; 6],
    delta: f64,
    delta_prime: f64,
}

impl LeslieCoefficients {
    pub fn new(alpha: [f64; 6]) -> Result<Self> {
        if !(alpha[3] > 0.0) {
            return Err(Error::InadmissibleCoefficients(format!(
                "alpha4 must be > 0, got {}",
                alpha[3]
            )));
        }
        let verdict = validate_leslie(alpha);
        if !verdict.admissible {
            return Err(Error::InadmissibleCoefficients(format!(
                "no delta in (0, 1) with alpha4 - |alpha1| - |alpha5| - |alpha6| - 1/(1 - delta) > 0 for {alpha:?}"
            )));
        }
        Ok(LeslieCoefficients {
            alpha,
            delta: verdict.delta,
            delta_prime: verdict.delta_prime,
        })
    }

    pub fn alpha(&self) -> [f64; 6] {
        self.alpha
    }

    pub fn viscosity(&self) -> f64 {
        self.alpha[3]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    /// `α₂ = 0` and `α₃ = 1`: the setting in which the energy law is stated.
    pub fn is_energy_identity(&self) -> bool {
        self.alpha[1] == 0.0 && self.alpha[2] == 1.0
    }
}

/// `α₄|D|² + α₁(n·Dn)² + 2(ṅ·Dn) + (α₅+α₆)|Dn|² + |ṅ|²` at one point.
#[inline]
pub fn dissipation_density_point(n: &Vec3, ndot: &Vec3, d: &Mat3, alpha: &[f64; 6]) -> f64 {
    let dn = mat_vec(d, n);
    let ndn = dot(n, &dn);
    alpha[3] * contract(d, d)
        + alpha[0] * ndn * ndn
        + 2.0 * dot(ndot, &dn)
        + (alpha[4] + alpha[5]) * norm_sq(&dn)
        + norm_sq(ndot)
}

pub fn dissipation_density(n: &VectorField, ndot: &VectorField, dv: &TensorField, alpha: &[f64; 6]) -> ScalarField {
    let values = (0..n.grid().len())
        .map(|idx| dissipation_density_point(&n.at(idx), &ndot.at(idx), &dv.at(idx), alpha))
        .collect();
    ScalarField::from_values(n.grid(), values)
}

/// Non-Newtonian Leslie stress at one point (the `α₄D` part is excluded).
#[inline]
pub fn leslie_stress_point(n: &Vec3, ndot: &Vec3, d: &Mat3, alpha: &[f64; 6]) -> Mat3 {
    let dn = mat_vec(d, n);
    let ndn = dot(n, &dn);
    let nn = outer(n, n);
    let ndot_n = outer(ndot, n);
    let n_ndot = outer(n, ndot);
    let dn_n = outer(&dn, n);
    let n_dn = outer(n, &dn);
    let mut s = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = alpha[0] * ndn * nn[i][j]
                + alpha[1] * ndot_n[i][j]
                + alpha[2] * n_ndot[i][j]
                + alpha[4] * dn_n[i][j]
                + alpha[5] * n_dn[i][j];
        }
    }
    s
}

/// `α₁(Dn·n)n⊗n + α₂ṅ⊗n + α₃n⊗ṅ + α₅Dn⊗n + α₆n⊗Dn`, dealiased.
pub fn leslie_stress(n: &VectorField, ndot: &VectorField, dv: &TensorField, alpha: &[f64; 6]) -> TensorField {
    crate::fields::dealias(&TensorField::from_points(n.grid(), |idx| {
        leslie_stress_point(&n.at(idx), &ndot.at(idx), &dv.at(idx), alpha)
    }))
}

/// Symmetric velocity gradient `D(v)`.
pub fn strain_rate(v: &VectorField) -> TensorField {
    let g = vector_gradient(v);
    TensorField::from_points(v.grid(), |idx| sym_skew(&g.at(idx)).0)
}

/// Total explicit stress `−v⊗v − ∇n⊙∇n + (∇Φ⊗∇Φ)(Id + εn⊗n) + σ_Leslie`.
fn explicit_stress(state: &State, derived: &Derived, ndot: &VectorField, params: &ModelParams) -> TensorField {
    let alpha = params.leslie.alpha();
    let eps = params.epsilon;
    TensorField::from_points(state.grid(), |idx| {
        let v = state.v.at(idx);
        let n = state.n.at(idx);
        let (strain, _) = derived.strain_spin(idx);
        let conv = outer(&v, &v);
        let eri = ericksen_point(&derived.grad_n.at(idx));
        let ele = electric_stress_point(&derived.grad_phi.at(idx), &n, eps);
        let les = leslie_stress_point(&n, &ndot.at(idx), &strain, &alpha);
        let mut t = ZERO33;
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = -conv[i][j] - eri[i][j] + ele[i][j] + les[i][j];
            }
        }
        t
    })
}

fn momentum_rhs_spectra(state: &State, derived: &Derived, params: &ModelParams) -> Vec<Spectrum> {
    let ndot = lie_derivative_from(state, derived, params.epsilon, &params.potential);
    let stress = explicit_stress(state, derived, &ndot, params);
    let mut rhs = tensor_divergence_spectra(&stress, true);
    leray_project_spectra(&mut rhs);
    rhs
}

/// Leray-projected explicit forcing
/// `−(v·∇)v − div(∇n⊙∇n) + div((∇Φ⊗∇Φ)(Id + εn⊗n)) + div σ_Leslie`.
/// The Newtonian `(α₄/2)Δv` part is treated implicitly by [`step_flow`].
pub fn momentum_rhs(state: &State, params: &ModelParams) -> VectorField {
    VectorField::from_spectra(&momentum_rhs_spectra(state, &Derived::of(state), params))
}

pub fn cfl_number(v: &VectorField, dt: f64) -> f64 {
    v.sup_norm() * dt / v.grid().spacing()
}

/// One step: backward Euler on `(α₄/2)Δv`, forward Euler on the projected
/// forcing. Pressure is never formed.
pub fn step_flow(state: &State, params: &ModelParams, dt: f64) -> Result<VectorField> {
    let cfl = cfl_number(&state.v, dt);
    if cfl > params.tol.cfl_limit {
        return Err(StepRejection::Cfl {
            cfl,
            limit: params.tol.cfl_limit,
        }
        .into());
    }
    let derived = Derived::of(state);
    let rhs = momentum_rhs_spectra(state, &derived, params);
    let mut current = state.v.to_spectral();
    leray_project_spectra(&mut current);
    let nu = 0.5 * params.leslie.viscosity();
    let k_sq = state.grid().k_sq();
    let mut next: Vec<Spectrum> = current
        .iter()
        .zip(&rhs)
        .map(|(c, r)| c.map_modes(|k, x| (x + dt * r.coeffs()[k]) / (1.0 + dt * nu * k_sq[k])))
        .collect();
    leray_project_spectra(&mut next);
    Ok(VectorField::from_spectra(&next))
}
