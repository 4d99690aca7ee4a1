//! Anisotropic electrostatics `−div((Id + ε n⊗n)∇Φ) = c_p − c_m` on the
//! zero-mean subspace, and the electric stress and torque it induces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    divergence_of_spectra, gradient, integrate, physical_of, spectra_of, Complex64, ScalarField,
    Spectrum, TensorField, VectorField,
};
use crate::point::{add, dot, outer, scale, Mat3, Vec3};

/// Dielectric anisotropy `ε_a ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DielectricParams {
    epsilon_a: f64,
}

impl DielectricParams {
    pub fn new(epsilon_a: f64) -> Result<Self> {
        if !(epsilon_a >= 0.0) || !epsilon_a.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dielectric anisotropy must be finite and non-negative, got {epsilon_a}"
            )));
        }
        Ok(DielectricParams { epsilon_a })
    }

    pub fn epsilon_a(&self) -> f64 {
        self.epsilon_a
    }
}

/// `(Id + ε n⊗n) ξ`
#[inline]
pub fn apply_dielectric(n: &Vec3, eps: f64, xi: &Vec3) -> Vec3 {
    add(xi, &scale(eps * dot(n, xi), n))
}

/// Pointwise `Id + ε n⊗n`. Rejects directors with `sup|n| > 1 + 10λ`.
pub fn dielectric_tensor(n: &VectorField, eps: f64, lambda: f64) -> Result<TensorField> {
    let bound = 1.0 + 10.0 * lambda;
    let sup_n = n.sup_norm();
    if sup_n > bound {
        return Err(Error::DirectorBlowThrough { sup_n, bound });
    }
    let d = n.grid().dim();
    Ok(TensorField::from_points(n.grid(), |idx| {
        let nv = n.at(idx);
        let mut m = outer(&nv, &nv);
        for (i, row) in m.iter_mut().enumerate() {
            for x in row.iter_mut() {
                *x *= eps;
            }
            if i < d {
                row[i] += 1.0;
            }
        }
        m
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolveReport {
    pub iterations: usize,
    /// Discrete L² norm of `AΦ − (ρ − mean ρ)`.
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PoissonSettings {
    fn default() -> Self {
        PoissonSettings {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// Modes on which the operator acts: everything except the zero mode and
/// the modes whose derivative wavenumbers all vanish (Nyquist corners).
fn project_solvable(s: &mut Spectrum) {
    let grid = s.grid().clone();
    let d = grid.dim();
    for (idx, c) in s.coeffs_mut().iter_mut().enumerate() {
        let active = (0..d).any(|a| grid.k_deriv(a)[idx] != 0.0);
        if !active {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

fn apply_operator_spectral(f: &Spectrum, n: &VectorField, eps: f64) -> Spectrum {
    let grid = f.grid();
    let d = grid.dim();
    let derivs: Vec<Spectrum> = (0..d).map(|a| f.derivative(a)).collect();
    let grad = physical_of(&derivs);
    let fluxes: Vec<ScalarField> = if eps == 0.0 {
        grad
    } else {
        let g = VectorField::from_components(grad);
        VectorField::from_points(grid, |idx| {
            apply_dielectric(&n.at(idx), eps, &g.at(idx))
        })
        .components()
        .to_vec()
    };
    let mut out = divergence_of_spectra(&spectra_of(&fluxes));
    out.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
    out
}

/// Matrix-free `A f = −div((Id + ε n⊗n)∇f)`.
pub fn apply_operator(f: &ScalarField, n: &VectorField, eps: f64) -> ScalarField {
    apply_operator_spectral(&f.to_spectral(), n, eps).to_physical()
}

fn spectral_l2(s: &Spectrum) -> f64 {
    (s.dot(s) * s.grid().volume()).sqrt()
}

/// Solves for the zero-mean potential by preconditioned conjugate gradients,
/// with the constant-coefficient preconditioner `(−(1 + ε/2)Δ)⁻¹`.
pub fn solve_potential(
    n: &VectorField,
    c_p: &ScalarField,
    c_m: &ScalarField,
    eps: f64,
    settings: PoissonSettings,
) -> Result<(ScalarField, PoissonSolveReport)> {
    solve_potential_from(n, c_p, c_m, eps, settings, None)
}

/// As [`solve_potential`], starting the iteration from `guess` (typically the
/// potential of the previous time step) instead of zero.
pub fn solve_potential_from(
    n: &VectorField,
    c_p: &ScalarField,
    c_m: &ScalarField,
    eps: f64,
    settings: PoissonSettings,
    guess: Option<&ScalarField>,
) -> Result<(ScalarField, PoissonSolveReport)> {
    let grid = c_p.grid().clone();
    let imbalance = integrate(c_p) - integrate(c_m);
    let allowed = 1e-10 * f64::max(1.0, integrate(c_p) + integrate(c_m));
    if imbalance.abs() > allowed {
        return Err(Error::NonNeutralCharge { imbalance, allowed });
    }

    let rho = c_p.zip_map(c_m, |a, b| a - b);
    let mut b = rho.to_spectral();
    // Charge density minus its mean: the solvable right-hand side.
    b.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    let mut b_solvable = b.clone();
    project_solvable(&mut b_solvable);

    let precond_scale = 1.0 + 0.5 * eps;
    let d = grid.dim();
    let k_tilde_sq: Vec<f64> = (0..grid.len())
        .map(|idx| (0..d).map(|a| grid.k_deriv(a)[idx].powi(2)).sum())
        .collect();
    let precondition = |r: &Spectrum| {
        r.map_modes(|k, c| {
            if k_tilde_sq[k] == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / (precond_scale * k_tilde_sq[k])
            }
        })
    };
    let true_residual = |x: &Spectrum| {
        let mut r = apply_operator_spectral(x, n, eps);
        r.add_scaled(-1.0, &b);
        spectral_l2(&r)
    };

    let (mut x, initial_residual) = match guess {
        Some(g) => {
            let mut x = g.to_spectral();
            project_solvable(&mut x);
            let res = true_residual(&x);
            (x, res)
        }
        None => (Spectrum::zeros(&grid), spectral_l2(&b)),
    };
    let mut report = PoissonSolveReport {
        iterations: 0,
        final_residual: initial_residual,
        converged: false,
    };
    if report.final_residual <= settings.tol {
        report.converged = true;
        return Ok((x.to_physical(), report));
    }

    let mut r = if guess.is_some() {
        let mut r = apply_operator_spectral(&x, n, eps);
        r.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
        r.add_scaled(1.0, &b_solvable);
        project_solvable(&mut r);
        r
    } else {
        b_solvable.clone()
    };
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    while report.iterations < settings.max_iter {
        let mut ap = apply_operator_spectral(&p, n, eps);
        project_solvable(&mut ap);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let step = rz / pap;
        x.add_scaled(step, &p);
        r.add_scaled(-step, &ap);
        report.iterations += 1;
        if spectral_l2(&r) <= 0.5 * settings.tol {
            let res = true_residual(&x);
            report.final_residual = res;
            if res <= settings.tol {
                report.converged = true;
                break;
            }
            // Recursive residual drifted from the true one; restart from it.
            r = apply_operator_spectral(&x, n, eps);
            r.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
            r.add_scaled(1.0, &b_solvable);
            project_solvable(&mut r);
            z = precondition(&r);
            p = z.clone();
            rz = r.dot(&z);
            continue;
        }
        z = precondition(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p = z.map_modes(|k, c| c + beta * p.coeffs()[k]);
    }
    if !report.converged {
        report.final_residual = true_residual(&x);
        report.converged = report.final_residual <= settings.tol;
    }
    if !report.converged {
        return Err(Error::NoConvergence(report));
    }
    Ok((x.to_physical(), report))
}

/// Pointwise `(∇Φ⊗∇Φ)(Id + ε n⊗n)` from a precomputed `∇Φ`, not dealiased.
pub(crate) fn electric_stress_point(grad_phi: &Vec3, n: &Vec3, eps: f64) -> Mat3 {
    outer(grad_phi, &apply_dielectric(n, eps, grad_phi))
}

/// Maxwell stress `(∇Φ⊗∇Φ)(Id + ε n⊗n)`, dealiased.
pub fn electric_stress(phi: &ScalarField, n: &VectorField, eps: f64) -> TensorField {
    let g = gradient(phi);
    crate::fields::dealias(&TensorField::from_points(phi.grid(), |idx| {
        electric_stress_point(&g.at(idx), &n.at(idx), eps)
    }))
}

pub(crate) fn electric_torque_point(grad_phi: &Vec3, n: &Vec3, eps: f64) -> Vec3 {
    scale(eps * dot(grad_phi, n), grad_phi)
}

/// Electric torque `ε(∇Φ⊗∇Φ)n`, dealiased.
pub fn electric_torque(phi: &ScalarField, n: &VectorField, eps: f64) -> VectorField {
    let g = gradient(phi);
    crate::fields::dealias(&VectorField::from_points(phi.grid(), |idx| {
        electric_torque_point(&g.at(idx), &n.at(idx), eps)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{inner, l2_norm, vector_gradient, Grid};
    use crate::testing::{band_limited, band_limited_vector, director, max_diff, random_unit, rng};
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::new(2, n).unwrap()
    }

    fn neutral_pair(g: &Grid, seed: u64) -> (ScalarField, ScalarField) {
        let rho = band_limited(g, 4, &mut rng(seed));
        (rho.map(|r| 2.0 + r), ScalarField::constant(g, 2.0))
    }

    #[test]
    fn dielectric_params_reject_negative_anisotropy() {
        assert!(DielectricParams::new(-0.1).is_err());
        assert!(DielectricParams::new(f64::NAN).is_err());
        assert_eq!(DielectricParams::new(0.3).unwrap().epsilon_a(), 0.3);
    }

    #[test]
    fn dielectric_tensor_examples() {
        let g = grid(8);
        let t = dielectric_tensor(&VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]), 0.5, 1e-3).unwrap();
        assert_eq!(t.at(3)[0], [1.5, 0.0, 0.0]);
        assert_eq!(t.at(3)[1], [0.0, 1.0, 0.0]);
        let id = dielectric_tensor(&VectorField::zeros(&g), 0.5, 1e-3).unwrap();
        assert_eq!(id.at(0)[0][0], 1.0);
        assert_eq!(id.at(0)[0][1], 0.0);
        assert_eq!(id.at(0)[1][1], 1.0);
    }

    #[test]
    fn dielectric_eigenvalues_for_unit_directors() {
        let g = grid(8);
        let eps = 0.7;
        let mut r = rng(20);
        let units: Vec<[f64; 3]> = (0..g.len()).map(|_| random_unit(&mut r, 2)).collect();
        let n = VectorField::from_points(&g, |i| units[i]);
        let t = dielectric_tensor(&n, eps, 1e-3).unwrap();
        for i in 0..g.len() {
            let m = t.at(i);
            let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
            assert!((mid - rad - 1.0).abs() < 1e-12);
            assert!((mid + rad - 1.0 - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn dielectric_tensor_detects_blow_through() {
        let g = grid(8);
        let n = VectorField::from_fn(&g, |_| [1.02, 0.0, 0.0]);
        assert!(matches!(dielectric_tensor(&n, 0.1, 1e-3), Err(Error::DirectorBlowThrough { .. })));
    }

    #[test]
    fn equal_charges_give_zero_potential() {
        let g = grid(16);
        let c = ScalarField::constant(&g, 1.3);
        let n = director(&g, 0.9, &mut rng(22));
        let (phi, report) = solve_potential(&n, &c, &c, 0.4, PoissonSettings::default()).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        assert!(report.converged);
    }

    #[test]
    fn isotropic_cosine_charge() {
        let g = grid(32);
        let c_p = ScalarField::from_fn(&g, |x| 1.0 + x[0].cos());
        let c_m = ScalarField::constant(&g, 1.0);
        let (phi, _) = solve_potential(&VectorField::zeros(&g), &c_p, &c_m, 0.0, PoissonSettings::default()).unwrap();
        let exact = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(max_diff(phi.values(), exact.values()) <= 1e-12);
    }

    #[test]
    fn anisotropic_solve_meets_tolerance_quickly() {
        let g = grid(64);
        let n = director(&g, 1.0, &mut rng(23));
        let (c_p, c_m) = neutral_pair(&g, 24);
        let (phi, report) = solve_potential(&n, &c_p, &c_m, 0.3, PoissonSettings::default()).unwrap();
        assert!(report.iterations <= 50, "{report:?}");
        assert!(phi.mean().abs() < 1e-14);
        let mut residual = apply_operator(&phi, &n, 0.3);
        residual.add_scaled(-1.0, &c_p.zip_map(&c_m, |a, b| a - b));
        let mean = residual.mean();
        let res = l2_norm(&residual.map(|r| r - mean));
        assert!(res <= 1e-10, "{res}");
        assert!((res - report.final_residual).abs() < 1e-12);
    }

    #[test]
    fn testing_with_the_potential_gives_the_field_energy() {
        let g = grid(64);
        let eps = 0.3;
        let n = director(&g, 1.0, &mut rng(25));
        let (c_p, c_m) = neutral_pair(&g, 26);
        let (phi, _) = solve_potential(&n, &c_p, &c_m, eps, PoissonSettings::default()).unwrap();
        let lhs = inner(&c_p.zip_map(&c_m, |a, b| a - b), &phi);
        let gp = gradient(&phi);
        let rhs = crate::fields::integrate_points(&g, |i| dot(&apply_dielectric(&n.at(i), eps, &gp.at(i)), &gp.at(i)));
        assert!((lhs - rhs).abs() <= 1e-9, "{lhs} {rhs}");
    }

    #[test]
    fn warm_start_from_the_solution_needs_no_iterations() {
        let g = grid(32);
        let n = director(&g, 0.8, &mut rng(27));
        let (c_p, c_m) = neutral_pair(&g, 28);
        let s = PoissonSettings::default();
        let (phi, _) = solve_potential(&n, &c_p, &c_m, 0.2, s).unwrap();
        let (again, report) = solve_potential_from(&n, &c_p, &c_m, 0.2, s, Some(&phi)).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(max_diff(phi.values(), again.values()) < 1e-14);
    }

    #[test]
    fn non_neutral_charge_is_rejected() {
        let g = grid(16);
        let c_p = ScalarField::constant(&g, 1.0);
        let c_m = ScalarField::constant(&g, 0.9);
        let err = solve_potential(&VectorField::zeros(&g), &c_p, &c_m, 0.0, PoissonSettings::default()).unwrap_err();
        assert!(matches!(err, Error::NonNeutralCharge { .. }));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let g = grid(32);
        let n = director(&g, 1.0, &mut rng(29));
        let (c_p, c_m) = neutral_pair(&g, 30);
        let s = PoissonSettings { tol: 1e-14, max_iter: 1 };
        match solve_potential(&n, &c_p, &c_m, 0.5, s) {
            Err(Error::NoConvergence(report)) => {
                assert!(!report.converged);
                assert_eq!(report.iterations, 1);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn electric_stress_examples() {
        let g = grid(16);
        let n = director(&g, 0.9, &mut rng(31));
        let zero = electric_stress(&ScalarField::zeros(&g), &n, 0.3);
        assert!(zero.components().iter().all(|c| c.max_abs() == 0.0));
        let phi = ScalarField::from_fn(&g, |x| x[0].cos());
        let s = electric_stress(&phi, &n, 0.0);
        let expected = ScalarField::from_fn(&g, |x| x[0].sin().powi(2));
        assert!(max_diff(s.component(0, 0).values(), expected.values()) < 1e-14);
        for (i, j) in [(0, 1), (1, 0), (1, 1)] {
            assert!(s.component(i, j).max_abs() < 1e-14);
        }
    }

    #[test]
    fn electric_stress_power_matches_index_loop() {
        let g = grid(32);
        let mut r = rng(32);
        let eps = 0.4;
        let phi = band_limited(&g, 3, &mut r);
        let n = director(&g, 1.0, &mut r);
        let v = band_limited_vector(&g, 3, &mut r);
        let s = electric_stress(&phi, &n, eps);
        let grad_v = vector_gradient(&v);
        let assembled: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| inner(s.component(i, j), grad_v.component(i, j)))
            .sum();
        let gp = gradient(&phi);
        let oracle = crate::fields::integrate_points(&g, |idx| {
            let (p, nn, gv) = (gp.at(idx), n.at(idx), grad_v.at(idx));
            let mut sum = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let m = if k == j { 1.0 } else { 0.0 } + eps * nn[k] * nn[j];
                        sum += p[i] * p[k] * m * gv[i][j];
                    }
                }
            }
            sum
        });
        assert!((assembled - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{assembled} {oracle}");
    }

    #[test]
    fn electric_torque_examples() {
        let g = grid(16);
        let mut r = rng(33);
        let phi = band_limited(&g, 3, &mut r);
        let n = director(&g, 0.9, &mut r);
        assert!(electric_torque(&phi, &n, 0.0).sup_norm() == 0.0);
        let t = electric_torque(
            &ScalarField::from_fn(&g, |x| x[0].cos()),
            &VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]),
            1.0,
        );
        let expected = ScalarField::from_fn(&g, |x| x[0].sin().powi(2));
        assert!(max_diff(t.component(0).values(), expected.values()) < 1e-14);
        assert!(t.component(1).max_abs() < 1e-14);
    }

    #[test]
    fn electric_torque_matches_index_loop() {
        let g = grid(32);
        let mut r = rng(34);
        let eps = 0.6;
        let phi = band_limited(&g, 3, &mut r);
        let n = director(&g, 1.0, &mut r);
        let torque = electric_torque(&phi, &n, eps);
        let gp = gradient(&phi);
        let raw = VectorField::from_points(&g, |idx| {
            let (p, nn) = (gp.at(idx), n.at(idx));
            let mut out = [0.0; 3];
            for i in 0..2 {
                for j in 0..2 {
                    out[i] += eps * p[i] * p[j] * nn[j];
                }
            }
            out
        });
        let oracle = crate::fields::dealias(&raw);
        assert!(crate::testing::max_diff_vec(&torque, &oracle) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn operator_is_symmetric_and_coercive(seed in any::<u64>(), eps in 0.0f64..1.0) {
            let g = grid(16);
            let mut r = rng(seed);
            let n = director(&g, 1.0, &mut r);
            let f = band_limited(&g, 7, &mut r);
            let h = band_limited(&g, 7, &mut r);
            let a = inner(&apply_operator(&f, &n, eps), &h);
            let b = inner(&f, &apply_operator(&h, &n, eps));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            let energy = inner(&apply_operator(&f, &n, eps), &f);
            let grad_sq = crate::fields::l2_norm_vector(&gradient(&f)).powi(2);
            prop_assert!(energy >= (1.0 - 1e-8) * grad_sq);
        }
    }
}
