//! Initial data presets and the hypothesis gate applied to them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::director::MINIMIZER_NORM_SQ;
use crate::electrostatics::{solve_potential, PoissonSettings, PoissonSolveReport};
use crate::error::{Error, Result};
use crate::fields::{divergence, integrate, l2_norm, l2_norm_vector, leray_project, Grid, ScalarField, VectorField};
use crate::model::State;
use crate::point::Vec3;

use super::SimConfig;

pub const PRESETS: [&str; 4] = ["rest", "charged-blob", "defect-pair", "random-smooth"];

/// Initial data before the potential is solved.
pub(crate) struct Seeded {
    pub c_p: ScalarField,
    pub c_m: ScalarField,
    pub v: VectorField,
    pub n: VectorField,
    /// Position of the preset's random stream after sampling.
    pub rng_word_pos: u128,
}

/// Builds the preset named in `config`, verifies the hypotheses on it, and
/// solves for the matching potential.
pub fn init_state(config: &SimConfig) -> Result<State> {
    Ok(init_state_with_report(config)?.0)
}

pub(crate) fn init_state_with_report(config: &SimConfig) -> Result<(State, PoissonSolveReport, u128)> {
    let grid = config.grid()?;
    let seeded = seed_fields(&grid, config)?;
    let mut state = State {
        time: 0.0,
        c_p: seeded.c_p,
        c_m: seeded.c_m,
        phi: ScalarField::zeros(&grid),
        v: seeded.v,
        n: seeded.n,
    };
    verify_hypotheses(&state, config.c_bar)?;
    let settings = PoissonSettings {
        tol: config.poisson_tol,
        max_iter: config.poisson_max_iter,
    };
    let (phi, report) = solve_potential(&state.n, &state.c_p, &state.c_m, config.epsilon, settings)?;
    state.phi = phi;
    Ok((state, report, seeded.rng_word_pos))
}

pub(crate) fn seed_fields(grid: &Grid, config: &SimConfig) -> Result<Seeded> {
    let d = grid.dim();
    let c_bar = config.c_bar;
    let mut rng_word_pos = 0;
    let (c_p, c_m, v, n) = match config.preset.as_str() {
        "rest" => {
            let r = MINIMIZER_NORM_SQ.sqrt();
            (
                ScalarField::constant(grid, 1.0),
                ScalarField::constant(grid, 1.0),
                VectorField::zeros(grid),
                VectorField::from_fn(grid, |_| [r, 0.0, 0.0]),
            )
        }
        "charged-blob" => {
            // Equal-mass bumps at two centres, so the net charge vanishes
            // exactly for the trigonometric quadrature.
            let bump = |x: Vec3, centre: [f64; 3]| -> f64 {
                (0..d).map(|a| ((1.0 + (x[a] - centre[a]).cos()) / 2.0).powi(2)).product()
            };
            let p = [2.0, 1.0, 0.5];
            let q = [4.5, 3.8, 2.5];
            let base = 0.25 * c_bar;
            let amp = 0.5 * c_bar;
            let r = MINIMIZER_NORM_SQ.sqrt();
            (
                ScalarField::from_fn(grid, |x| base + amp * bump(x, p)),
                ScalarField::from_fn(grid, |x| base + amp * bump(x, q)),
                VectorField::zeros(grid),
                VectorField::from_fn(grid, |x| {
                    let theta = 0.6 * x[0].sin() * x[1].cos() + 0.3 * (x[0] + x[1]).cos();
                    [r * theta.cos(), r * theta.sin(), 0.0]
                }),
            )
        }
        "defect-pair" => {
            let a = std::f64::consts::FRAC_PI_2;
            let raw = VectorField::from_fn(grid, |x| [x[0].cos() - a.cos(), x[1].sin(), 0.0]);
            let scale = 0.9 / raw.sup_norm();
            (
                ScalarField::constant(grid, 1.0),
                ScalarField::constant(grid, 1.0),
                VectorField::zeros(grid),
                VectorField::from_fn(grid, |x| [scale * (x[0].cos() - a.cos()), scale * x[1].sin(), 0.0]),
            )
        }
        "random-smooth" => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let f_p = normalised(random_scalar(grid, &mut rng));
            let f_m = normalised(random_scalar(grid, &mut rng));
            let c_p = f_p.map(|f| 0.5 * c_bar + 0.3 * c_bar * f);
            let mut c_m = f_m.map(|f| 0.5 * c_bar + 0.3 * c_bar * f);
            let shift = c_p.mean() - c_m.mean();
            c_m.values_mut().iter_mut().for_each(|c| *c += shift);
            let v_raw = leray_project(&random_vector(grid, &mut rng));
            let v = scaled(&v_raw, 0.5);
            let n = scaled(&random_vector(grid, &mut rng), 0.9);
            rng_word_pos = rng.get_word_pos();
            (c_p, c_m, v, n)
        }
        other => return Err(Error::InvalidPreset(other.to_string())),
    };
    Ok(Seeded { c_p, c_m, v, n, rng_word_pos })
}

/// Integer wavevectors with `0 < max_j |k_j| ≤ 3`, in lexicographic order.
fn low_modes(d: usize) -> Vec<[i64; 3]> {
    let r: Vec<i64> = (-3..=3).collect();
    let third: &[i64] = if d == 3 { &r } else { &[0] };
    let mut out = Vec::new();
    for &a in &r {
        for &b in &r {
            for &c in third {
                if (a, b, c) != (0, 0, 0) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn random_scalar(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let modes: Vec<([i64; 3], f64, f64)> = low_modes(grid.dim())
        .into_iter()
        .map(|k| {
            let decay = 1.0 / (1.0 + (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64);
            (k, decay * rng.gen_range(-1.0..1.0), decay * rng.gen_range(-1.0..1.0))
        })
        .collect();
    ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(k, a, b)| {
                let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    })
}

fn random_vector(grid: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::from_components((0..grid.dim()).map(|_| random_scalar(grid, rng)).collect())
}

fn normalised(f: ScalarField) -> ScalarField {
    let m = f.max_abs();
    f.map(|x| x / m)
}

fn scaled(u: &VectorField, sup: f64) -> VectorField {
    let s = sup / u.sup_norm();
    VectorField::from_points(u.grid(), |idx| {
        let p = u.at(idx);
        [s * p[0], s * p[1], s * p[2]]
    })
}

/// Checks `0 ≤ c ≤ c̄`, `|n| ≤ 1`, `div v = 0` and charge neutrality,
/// naming the first violated bound.
pub fn verify_hypotheses(state: &State, c_bar: f64) -> Result<()> {
    for (name, c) in [("c_p", &state.c_p), ("c_m", &state.c_m)] {
        let (lo, hi) = (c.min(), c.max());
        if !(lo >= 0.0 && hi <= c_bar) {
            return Err(Error::HypothesisViolation(format!(
                "0 <= {name} <= c_bar = {c_bar} (found min {lo:e}, max {hi:e})"
            )));
        }
    }
    let sup_n = state.n.sup_norm();
    if !(sup_n <= 1.0) {
        return Err(Error::HypothesisViolation(format!("|n0| <= 1 (found sup |n0| = {sup_n})")));
    }
    let div = l2_norm(&divergence(&state.v));
    let allowed = 1e-10 * (1.0 + l2_norm_vector(&state.v));
    if !(div <= allowed) {
        return Err(Error::HypothesisViolation(format!("div v0 = 0 (found L2 norm {div:e})")));
    }
    let imbalance = integrate(&state.c_p) - integrate(&state.c_m);
    let tol = 1e-10 * f64::max(1.0, integrate(&state.c_p) + integrate(&state.c_m));
    if !(imbalance.abs() <= tol) {
        return Err(Error::HypothesisViolation(format!(
            "charge neutrality (found integral of c_p - c_m = {imbalance:e})"
        )));
    }
    Ok(())
}
