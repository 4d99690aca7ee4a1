//! Residuals of the time-integrated weak formulation against a fixed bank of
//! trigonometric space-time test functions.
//!
//! For a test function `ψ(x)τ(t)` every equation is brought to the form
//!
//! ```text
//! R = [A τ]_{t0}^{T} − ∫ A τ′ dt + ∫ B τ dt
//! ```
//!
//! where `A(t)` is the pairing of the evolving unknown with `ψ` and `B(t)`
//! collects the spatial terms after integration by parts. Time integrals use
//! the trapezoid rule over the recorded states.

use serde::{Deserialize, Serialize};

use crate::director::lie_derivative_from;
use crate::electrostatics::{apply_dielectric, electric_stress_point, electric_torque_point};
use crate::error::{Error, Result};
use crate::fields::{gradient, integrate_points, Grid, ScalarField, VectorField};
use crate::flow::leslie_stress_point;
use crate::kinematics::Derived;
use crate::model::{ModelParams, State};
use crate::point::{add, contract, dot, mat_vec, outer, scale, Mat3, Vec3, ZERO33};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wave {
    Cos,
    Sin,
}

/// `cos(k·x)` or `sin(k·x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialMode {
    pub k: [i64; 3],
    pub wave: Wave,
}

impl SpatialMode {
    fn phase(&self, x: &Vec3) -> f64 {
        (0..3).map(|a| self.k[a] as f64 * x[a]).sum()
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        match self.wave {
            Wave::Cos => self.phase(x).cos(),
            Wave::Sin => self.phase(x).sin(),
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let d = match self.wave {
            Wave::Cos => -self.phase(x).sin(),
            Wave::Sin => self.phase(x).cos(),
        };
        [self.k[0] as f64 * d, self.k[1] as f64 * d, self.k[2] as f64 * d]
    }
}

/// Temporal factor of a test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeProfile {
    One,
    Linear,
    Cosine,
}

impl TimeProfile {
    pub const ALL: [TimeProfile; 3] = [TimeProfile::One, TimeProfile::Linear, TimeProfile::Cosine];

    pub fn value(self, t: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::Linear => t,
            TimeProfile::Cosine => t.cos(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            TimeProfile::One => 0.0,
            TimeProfile::Linear => 1.0,
            TimeProfile::Cosine => -t.sin(),
        }
    }
}

/// Vector test field `a ψ(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorMode {
    pub amplitude: Vec3,
    pub mode: SpatialMode,
}

impl VectorMode {
    /// `div(aψ) = (a·k) ψ′`, so the field is solenoidal exactly when `a ⊥ k`.
    pub fn is_divergence_free(&self) -> bool {
        let k = [self.mode.k[0] as f64, self.mode.k[1] as f64, self.mode.k[2] as f64];
        dot(&self.amplitude, &k).abs() <= 1e-12
    }
}

/// Spatial test modes; each is combined with every [`TimeProfile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestBank {
    scalar: Vec<SpatialMode>,
    /// Solenoidal fields, used for the momentum and director equations.
    vector: Vec<VectorMode>,
}

impl TestBank {
    pub fn new(scalar: Vec<SpatialMode>, vector: Vec<VectorMode>) -> Result<Self> {
        if let Some(bad) = vector.iter().find(|m| !m.is_divergence_free()) {
            return Err(Error::InvalidTestFunction(format!(
                "momentum test field {bad:?} is not divergence-free"
            )));
        }
        Ok(TestBank { scalar, vector })
    }

    /// Four lowest-wavenumber modes per equation, each times `{1, t, cos t}`.
    pub fn standard() -> Self {
        let m = |k: [i64; 3], wave| SpatialMode { k, wave };
        let scalar = vec![
            m([1, 0, 0], Wave::Cos),
            m([0, 1, 0], Wave::Sin),
            m([1, 1, 0], Wave::Cos),
            m([1, -1, 0], Wave::Sin),
        ];
        let vector = vec![
            VectorMode { amplitude: [1.0, 0.0, 0.0], mode: m([0, 1, 0], Wave::Cos) },
            VectorMode { amplitude: [0.0, 1.0, 0.0], mode: m([1, 0, 0], Wave::Sin) },
            VectorMode { amplitude: [1.0, -1.0, 0.0], mode: m([1, 1, 0], Wave::Cos) },
            VectorMode { amplitude: [1.0, 1.0, 0.0], mode: m([1, -1, 0], Wave::Sin) },
        ];
        TestBank::new(scalar, vector).expect("standard bank is solenoidal")
    }

    pub fn scalar_modes(&self) -> &[SpatialMode] {
        &self.scalar
    }

    pub fn vector_modes(&self) -> &[VectorMode] {
        &self.vector
    }
}

/// Residuals per equation, ordered spatial mode major, time profile minor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResiduals {
    pub species_p: Vec<f64>,
    pub species_m: Vec<f64>,
    pub potential: Vec<f64>,
    pub momentum: Vec<f64>,
    pub director: Vec<f64>,
}

impl WeakResiduals {
    pub fn equations(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("species_p", &self.species_p),
            ("species_m", &self.species_m),
            ("potential", &self.potential),
            ("momentum", &self.momentum),
            ("director", &self.director),
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.equations()
            .iter()
            .flat_map(|(_, r)| r.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Running trapezoid sums for one equation and one spatial mode.
#[derive(Clone, Debug)]
struct Track {
    first: Option<(f64, f64)>,
    last: Option<(f64, f64, f64)>,
    integral: [f64; 3],
}

impl Track {
    fn new() -> Self {
        Track { first: None, last: None, integral: [0.0; 3] }
    }

    fn push(&mut self, t: f64, a: f64, b: f64) {
        if let Some((t0, a0, b0)) = self.last {
            let h = t - t0;
            for (slot, prof) in self.integral.iter_mut().zip(TimeProfile::ALL) {
                let f0 = -a0 * prof.derivative(t0) + b0 * prof.value(t0);
                let f1 = -a * prof.derivative(t) + b * prof.value(t);
                *slot += 0.5 * h * (f0 + f1);
            }
        } else {
            self.first = Some((t, a));
        }
        self.last = Some((t, a, b));
    }

    fn residuals(&self) -> [f64; 3] {
        let (t0, a0) = self.first.unwrap_or((0.0, 0.0));
        let (t1, a1, _) = self.last.unwrap_or((0.0, 0.0, 0.0));
        let mut out = [0.0; 3];
        for ((o, prof), int) in out.iter_mut().zip(TimeProfile::ALL).zip(self.integral) {
            *o = a1 * prof.value(t1) - a0 * prof.value(t0) + int;
        }
        out
    }
}

struct Sampled<T> {
    value: Vec<T>,
    grad: Vec<Vec3>,
}

/// Streams states in time order and accumulates every weak residual.
pub struct WeakFormAccumulator {
    grid: Grid,
    params: ModelParams,
    bank: TestBank,
    scalar: Vec<Sampled<f64>>,
    vector: Vec<Sampled<f64>>,
    tracks: [Vec<Track>; 5],
    states: usize,
}

impl WeakFormAccumulator {
    pub fn new(grid: &Grid, bank: &TestBank, params: &ModelParams) -> Self {
        let sample = |m: &SpatialMode| Sampled {
            value: (0..grid.len()).map(|i| m.value(&grid.coords(i))).collect(),
            grad: (0..grid.len()).map(|i| m.gradient(&grid.coords(i))).collect(),
        };
        let scalar: Vec<_> = bank.scalar.iter().map(sample).collect();
        let vector: Vec<_> = bank.vector.iter().map(|v| sample(&v.mode)).collect();
        let tracks = [
            vec![Track::new(); scalar.len()],
            vec![Track::new(); scalar.len()],
            vec![Track::new(); scalar.len()],
            vec![Track::new(); vector.len()],
            vec![Track::new(); vector.len()],
        ];
        WeakFormAccumulator {
            grid: grid.clone(),
            params: params.clone(),
            bank: bank.clone(),
            scalar,
            vector,
            tracks,
            states: 0,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn push(&mut self, state: &State) {
        assert!(state.grid() == &self.grid, "state grid differs from the test bank grid");
        let eps = self.params.epsilon;
        let alpha = self.params.leslie.alpha();
        let potential = self.params.potential;
        let derived = Derived::of(state);
        let ndot = lie_derivative_from(state, &derived, eps, &potential);
        let grad_cp = gradient(&state.c_p);
        let grad_cm = gradient(&state.c_m);
        let len = self.grid.len();

        // Pointwise fluxes shared by all test functions.
        let mut flux_p: Vec<Vec3> = Vec::with_capacity(len);
        let mut flux_m: Vec<Vec3> = Vec::with_capacity(len);
        let mut flux_phi: Vec<Vec3> = Vec::with_capacity(len);
        let mut stress: Vec<Mat3> = Vec::with_capacity(len);
        let mut reaction: Vec<Vec3> = Vec::with_capacity(len);
        let nu = alpha[3];
        for idx in 0..len {
            let n = state.n.at(idx);
            let v = state.v.at(idx);
            let gp = derived.grad_phi.at(idx);
            let cp = state.c_p.values()[idx];
            let cm = state.c_m.values()[idx];
            let fp = apply_dielectric(&n, eps, &add(&grad_cp.at(idx), &scale(cp, &gp)));
            let fm = apply_dielectric(&n, eps, &add(&grad_cm.at(idx), &scale(-cm, &gp)));
            flux_p.push(add(&scale(-cp, &v), &fp));
            flux_m.push(add(&scale(-cm, &v), &fm));
            flux_phi.push(apply_dielectric(&n, eps, &gp));

            let (strain, spin) = derived.strain_spin(idx);
            let grad_n = derived.grad_n.at(idx);
            let conv = outer(&v, &v);
            let eri = crate::director::ericksen_point(&grad_n);
            let ele = electric_stress_point(&gp, &n, eps);
            let les = leslie_stress_point(&n, &ndot.at(idx), &strain, &alpha);
            let mut s = ZERO33;
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] = -conv[i][j] + nu * strain[i][j] - eri[i][j] + ele[i][j] + les[i][j];
                }
            }
            stress.push(s);

            // Director: everything but n_t and Δn, i.e. n_t − Δn − G with
            // G = ε(∇Φ⊗∇Φ)n − ∂𝓕(n) − v·∇n + Ωn − Dn, stored as −G.
            let torque = electric_torque_point(&gp, &n, eps);
            let barrier = potential.gradient_at(&n);
            let adv = mat_vec(&grad_n, &v);
            let rot = mat_vec(&spin, &n);
            let str = mat_vec(&strain, &n);
            let mut g = ZERO33[0];
            for a in 0..3 {
                g[a] = -(torque[a] - barrier[a] - adv[a] + rot[a] - str[a]);
            }
            reaction.push(g);
        }

        let t = state.time;
        let grid = &self.grid;
        for (m, sample) in self.scalar.iter().enumerate() {
            let pair = |c: &ScalarField, flux: &[Vec3]| {
                let a = integrate_points(grid, |i| c.values()[i] * sample.value[i]);
                let b = integrate_points(grid, |i| dot(&flux[i], &sample.grad[i]));
                (a, b)
            };
            let (a, b) = pair(&state.c_p, &flux_p);
            self.tracks[0][m].push(t, a, b);
            let (a, b) = pair(&state.c_m, &flux_m);
            self.tracks[1][m].push(t, a, b);
            let b = integrate_points(grid, |i| {
                dot(&flux_phi[i], &sample.grad[i])
                    - (state.c_p.values()[i] - state.c_m.values()[i]) * sample.value[i]
            });
            self.tracks[2][m].push(t, 0.0, b);
        }
        for (m, (sample, vm)) in self.vector.iter().zip(&self.bank.vector).enumerate() {
            let amp = vm.amplitude;
            let test_grad = |i: usize| outer(&amp, &sample.grad[i]);
            let a = integrate_points(grid, |i| dot(&state.v.at(i), &amp) * sample.value[i]);
            let b = integrate_points(grid, |i| contract(&stress[i], &test_grad(i)));
            self.tracks[3][m].push(t, a, b);
            let a = integrate_points(grid, |i| dot(&state.n.at(i), &amp) * sample.value[i]);
            let b = integrate_points(grid, |i| {
                contract(&derived.grad_n.at(i), &test_grad(i))
                    + dot(&reaction[i], &amp) * sample.value[i]
            });
            self.tracks[4][m].push(t, a, b);
        }
        self.states += 1;
    }

    pub fn finish(&self) -> Result<WeakResiduals> {
        if self.states < 3 {
            return Err(Error::InsufficientTrajectory(self.states));
        }
        let collect = |tracks: &Vec<Track>| -> Vec<f64> {
            tracks.iter().flat_map(|t| t.residuals()).collect()
        };
        Ok(WeakResiduals {
            species_p: collect(&self.tracks[0]),
            species_m: collect(&self.tracks[1]),
            potential: collect(&self.tracks[2]),
            momentum: collect(&self.tracks[3]),
            director: collect(&self.tracks[4]),
        })
    }
}

/// Weak residuals of a stored trajectory (time-ordered, at least 3 states).
pub fn weak_form_residual(trajectory: &[State], bank: &TestBank, params: &ModelParams) -> Result<WeakResiduals> {
    if trajectory.len() < 3 {
        return Err(Error::InsufficientTrajectory(trajectory.len()));
    }
    let mut acc = WeakFormAccumulator::new(trajectory[0].grid(), bank, params);
    for s in trajectory {
        acc.push(s);
    }
    acc.finish()
}

/// Vector test field sampled on a grid; handy for checking solenoidality.
pub fn sample_vector_mode(grid: &Grid, mode: &VectorMode) -> VectorField {
    VectorField::from_fn(grid, |x| scale(mode.mode.value(&x), &mode.amplitude))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::divergence;
    use crate::testing::{params, rest_state, REFERENCE_ALPHA};

    fn grid() -> Grid {
        Grid::new(2, 16).unwrap()
    }

    /// Isotropic diffusion of equal densities with `n = 0`: every equation
    /// holds exactly for `c = 1 + a e^{−rate·t} cos x1` when `rate = 1`.
    fn diffusion_trajectory(rate: f64, samples: usize, t_end: f64) -> Vec<State> {
        let g = grid();
        (0..samples)
            .map(|s| {
                let t = t_end * s as f64 / (samples - 1) as f64;
                let mut state = rest_state(&g);
                state.time = t;
                state.n = VectorField::zeros(&g);
                state.c_p = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (-rate * t).exp() * x[0].cos());
                state.c_m = state.c_p.clone();
                state
            })
            .collect()
    }

    #[test]
    fn profiles_have_consistent_derivatives() {
        let h = 1e-6;
        for p in TimeProfile::ALL {
            for t in [0.0, 0.3, 1.7] {
                let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
                assert!((fd - p.derivative(t)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn standard_bank_is_solenoidal() {
        let g = grid();
        let bank = TestBank::standard();
        assert_eq!(bank.scalar_modes().len(), 4);
        for m in bank.vector_modes() {
            assert!(m.is_divergence_free());
            assert!(divergence(&sample_vector_mode(&g, m)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn compressible_test_field_is_rejected() {
        let bad = VectorMode {
            amplitude: [1.0, 0.0, 0.0],
            mode: SpatialMode { k: [1, 0, 0], wave: Wave::Cos },
        };
        assert!(!bad.is_divergence_free());
        assert!(matches!(TestBank::new(vec![], vec![bad]), Err(Error::InvalidTestFunction(_))));
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let p = params(0.0, REFERENCE_ALPHA);
        let two = diffusion_trajectory(1.0, 2, 0.1);
        assert!(matches!(
            weak_form_residual(&two, &TestBank::standard(), &p),
            Err(Error::InsufficientTrajectory(2))
        ));
        let acc = WeakFormAccumulator::new(&grid(), &TestBank::standard(), &p);
        assert!(acc.finish().is_err());
    }

    #[test]
    fn rest_trajectory_has_no_residual() {
        let g = grid();
        let trajectory: Vec<State> = (0..3)
            .map(|s| {
                let mut st = rest_state(&g);
                st.time = 0.1 * s as f64;
                st
            })
            .collect();
        let r = weak_form_residual(&trajectory, &TestBank::standard(), &params(0.5, REFERENCE_ALPHA)).unwrap();
        assert!(r.max_abs() <= 1e-10, "{r:?}");
        assert!(r.equations().iter().all(|(_, v)| v.len() == 12));
    }

    #[test]
    fn exact_solution_converges_and_wrong_one_does_not() {
        let p = params(0.3, REFERENCE_ALPHA);
        let bank = TestBank::standard();
        let coarse = weak_form_residual(&diffusion_trajectory(1.0, 51, 0.5), &bank, &p).unwrap();
        let fine = weak_form_residual(&diffusion_trajectory(1.0, 101, 0.5), &bank, &p).unwrap();
        let ratio = coarse.max_abs() / fine.max_abs();
        assert!(fine.max_abs() < 1e-4, "{fine:?}");
        assert!((3.5..4.5).contains(&ratio), "trapezoid ratio {ratio}");
        for eq in [&fine.potential, &fine.momentum, &fine.director] {
            assert!(eq.iter().all(|x| x.abs() < 1e-12));
        }
        let wrong = weak_form_residual(&diffusion_trajectory(2.0, 101, 0.5), &bank, &p).unwrap();
        assert!(wrong.max_abs() > 0.1, "{wrong:?}");
    }

    #[test]
    fn accumulator_matches_batch_evaluation() {
        let p = params(0.3, REFERENCE_ALPHA);
        let bank = TestBank::standard();
        let trajectory = diffusion_trajectory(1.0, 11, 0.2);
        let mut acc = WeakFormAccumulator::new(&grid(), &bank, &p);
        for s in &trajectory {
            acc.push(s);
        }
        assert_eq!(acc.states(), 11);
        assert_eq!(acc.finish().unwrap(), weak_form_residual(&trajectory, &bank, &p).unwrap());
    }
}
