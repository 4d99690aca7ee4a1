//! Director dynamics: corotational transport, elastic relaxation, electric
//! torque and the logarithmic barrier that keeps `|n| ≤ 1`.
//!
//! The barrier is `𝓕(n) = ½ F(|n|²)` with `F(r) = (1 − r) ln(1 − r) − F_*`,
//! normalised so that `min F = F(1 − 1/e) = 0`. Its derivative is replaced by
//! a linear continuation beyond `r = 1 − λ`, which keeps `F′_λ` total and
//! monotone and lets `|n|` overshoot 1 by `O(λ)`.

use crate::electrostatics::electric_torque_point;
use crate::error::{Error, Result, StepRejection};
use crate::fields::{dealias, Complex64, ScalarField, Spectrum, TensorField, VectorField};
use crate::kinematics::Derived;
use crate::model::{ModelParams, State};
use crate::point::{add, mat_vec, norm_sq, scale, Mat3, Vec3, ZERO33};

/// `F_* = −1/e`, the minimum of `(1 − r) ln(1 − r)`.
pub const F_STAR: f64 = -0.36787944117144233;

/// Location of the potential minimum, `|n|² = 1 − 1/e`.
pub const MINIMIZER_NORM_SQ: f64 = 1.0 + F_STAR;

/// Regularised singular potential with barrier parameter `λ ∈ (0, 0.5]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPotential {
    lambda: f64,
}

impl SingularPotential {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "barrier regularisation lambda must lie in (0, 0.5], got {lambda}"
            )));
        }
        Ok(SingularPotential { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn knee(&self) -> f64 {
        1.0 - self.lambda
    }

    /// `F_λ(r)`: the logarithmic branch below the knee, its quadratic C¹
    /// continuation above.
    pub fn f(&self, r: f64) -> f64 {
        let r0 = self.knee();
        if r <= r0 {
            let s = 1.0 - r;
            s * (-r).ln_1p() - F_STAR
        } else {
            let base = self.lambda * self.lambda.ln() - F_STAR;
            let dr = r - r0;
            base + self.df(r0) * dr + dr * dr / (2.0 * self.lambda)
        }
    }

    /// `F′_λ(r)`, monotone nondecreasing on all of ℝ.
    pub fn df(&self, r: f64) -> f64 {
        let r0 = self.knee();
        if r <= r0 {
            -(-r).ln_1p() - 1.0
        } else {
            -self.lambda.ln() - 1.0 + (r - r0) / self.lambda
        }
    }

    pub fn d2f(&self, r: f64) -> f64 {
        if r <= self.knee() {
            1.0 / (1.0 - r)
        } else {
            1.0 / self.lambda
        }
    }

    /// `𝓕(n) = ½ F_λ(|n|²)`.
    pub fn value(&self, n: &Vec3) -> f64 {
        0.5 * self.f(norm_sq(n))
    }

    /// `∂𝓕(n) = F′_λ(|n|²) n`.
    pub fn gradient_at(&self, n: &Vec3) -> Vec3 {
        scale(self.df(norm_sq(n)), n)
    }

    /// Largest eigenvalue of the Hessian of `𝓕` at `n`, i.e. the rate of the
    /// explicit barrier term in the radial direction.
    pub fn stiffness(&self, n: &Vec3) -> f64 {
        let r = norm_sq(n);
        self.df(r) + 2.0 * r * self.d2f(r)
    }

    /// Worst-case explicit step bound `λ / (2(−ln λ))`, attained when `|n|`
    /// sits in the regularised region.
    pub fn worst_case_dt(&self) -> f64 {
        self.lambda / (2.0 * (-self.lambda.ln()))
    }
}

pub fn potential_value(n: &Vec3, potential: &SingularPotential) -> f64 {
    potential.value(n)
}

pub fn potential_gradient(n: &VectorField, potential: &SingularPotential) -> VectorField {
    VectorField::from_points(n.grid(), |idx| potential.gradient_at(&n.at(idx)))
}

/// `∫ 𝓕_λ(n)`
pub fn potential_integral(n: &VectorField, potential: &SingularPotential) -> f64 {
    crate::fields::integrate_points(n.grid(), |idx| potential.value(&n.at(idx)))
}

/// Pointwise `−v·∇n + Ω(v)n − D(v)n`.
#[inline]
fn kinematic_point(n: &Vec3, v: &Vec3, grad_n: &Mat3, strain: &Mat3, spin: &Mat3) -> Vec3 {
    let adv = mat_vec(grad_n, v);
    let rot = mat_vec(spin, n);
    let str = mat_vec(strain, n);
    [
        -adv[0] + rot[0] - str[0],
        -adv[1] + rot[1] - str[1],
        -adv[2] + rot[2] - str[2],
    ]
}

/// `−v·∇n + Ω(v)n − D(v)n`, dealiased.
pub fn kinematic_terms(n: &VectorField, v: &VectorField) -> VectorField {
    let grad_n = crate::fields::vector_gradient(n);
    let grad_v = crate::fields::vector_gradient(v);
    dealias(&VectorField::from_points(n.grid(), |idx| {
        let (strain, spin) = crate::point::sym_skew(&grad_v.at(idx));
        kinematic_point(&n.at(idx), &v.at(idx), &grad_n.at(idx), &strain, &spin)
    }))
}

/// Pointwise nonlinear part of the Lie derivative,
/// `ε(∇Φ⊗∇Φ)n − ∂𝓕(n) − D(v)n`.
#[inline]
fn lie_nonlinear_point(n: &Vec3, grad_phi: &Vec3, strain: &Mat3, eps: f64, potential: &SingularPotential) -> Vec3 {
    let torque = electric_torque_point(grad_phi, n, eps);
    let barrier = potential.gradient_at(n);
    let str = mat_vec(strain, n);
    [
        torque[0] - barrier[0] - str[0],
        torque[1] - barrier[1] - str[1],
        torque[2] - barrier[2] - str[2],
    ]
}

pub(crate) fn lie_derivative_from(state: &State, derived: &Derived, eps: f64, potential: &SingularPotential) -> VectorField {
    let mut out = dealias(&VectorField::from_points(state.grid(), |idx| {
        let (strain, _) = derived.strain_spin(idx);
        lie_nonlinear_point(&state.n.at(idx), &derived.grad_phi.at(idx), &strain, eps, potential)
    }));
    out.add_scaled(1.0, &derived.lap_n);
    out
}

/// Corotational rate `ṅ = n_t + v·∇n − Ω(v)n`, evaluated algebraically from
/// the director equation: `Δn + ε(∇Φ⊗∇Φ)n − ∂𝓕(n) − D(v)n`.
pub fn lie_derivative(state: &State, eps: f64, potential: &SingularPotential) -> VectorField {
    lie_derivative_from(state, &Derived::of(state), eps, potential)
}

/// Explicit part of `n_t`: everything except `Δn`, dealiased.
fn director_explicit(state: &State, derived: &Derived, eps: f64, potential: &SingularPotential) -> VectorField {
    dealias(&VectorField::from_points(state.grid(), |idx| {
        let n = state.n.at(idx);
        let (strain, spin) = derived.strain_spin(idx);
        let kin = kinematic_point(&n, &state.v.at(idx), &derived.grad_n.at(idx), &strain, &spin);
        let torque = electric_torque_point(&derived.grad_phi.at(idx), &n, eps);
        let barrier = potential.gradient_at(&n);
        add(&add(&kin, &torque), &scale(-1.0, &barrier))
    }))
}

/// Full right-hand side `n_t = Δn + ε(∇Φ⊗∇Φ)n − ∂𝓕(n) − v·∇n + Ω(v)n − D(v)n`.
pub fn director_rhs(state: &State, eps: f64, potential: &SingularPotential) -> VectorField {
    let derived = Derived::of(state);
    let mut out = director_explicit(state, &derived, eps, potential);
    out.add_scaled(1.0, &derived.lap_n);
    out
}

/// One IMEX step of the director equation: backward Euler on `Δn`, forward
/// Euler on everything else.
pub fn step_director(state: &State, params: &ModelParams, dt: f64) -> Result<VectorField> {
    let potential = &params.potential;
    let stiffness = (0..state.grid().len())
        .map(|idx| potential.stiffness(&state.n.at(idx)))
        .fold(0.0, f64::max);
    if dt * stiffness > 1.0 {
        return Err(StepRejection::BarrierStiffness {
            product: dt * stiffness,
        }
        .into());
    }
    let derived = Derived::of(state);
    let rhs = director_explicit(state, &derived, params.epsilon, potential).to_spectral();
    let current = state.n.to_spectral();
    let k_sq = state.grid().k_sq();
    let next: Vec<Spectrum> = current
        .iter()
        .zip(&rhs)
        .map(|(c, r)| {
            c.map_modes(|k, x| -> Complex64 { (x + dt * r.coeffs()[k]) / (1.0 + dt * k_sq[k]) })
        })
        .collect();
    let n_next = VectorField::from_spectra(&next);
    let bound = 1.0 + 10.0 * params.lambda();
    let sup_n = n_next.sup_norm();
    if !(sup_n <= bound) {
        return Err(StepRejection::Barrier { sup_n, bound }.into());
    }
    Ok(n_next)
}

/// Ericksen stress `(∇n⊙∇n)_ij = Σ_k ∂_i n_k ∂_j n_k`, dealiased.
pub fn ericksen_stress(n: &VectorField) -> TensorField {
    let grad_n = crate::fields::vector_gradient(n);
    dealias(&TensorField::from_points(n.grid(), |idx| {
        ericksen_point(&grad_n.at(idx))
    }))
}

#[inline]
pub(crate) fn ericksen_point(grad_n: &Mat3) -> Mat3 {
    let mut m = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| grad_n[k][i] * grad_n[k][j]).sum();
        }
    }
    m
}

/// `½∫|∇n|²`
pub fn elastic_energy(n: &VectorField) -> f64 {
    let grad_n = crate::fields::vector_gradient(n);
    0.5 * grad_n
        .components()
        .iter()
        .map(|c| crate::fields::inner(c, c))
        .sum::<f64>()
}

/// `|n|²` as a field.
pub fn norm_sq_field(n: &VectorField) -> ScalarField {
    ScalarField::from_values(
        n.grid(),
        (0..n.grid().len()).map(|idx| norm_sq(&n.at(idx))).collect(),
    )
}
