//! Helpers shared by unit tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::director::{SingularPotential, MINIMIZER_NORM_SQ};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::flow::LeslieCoefficients;
use crate::model::{ModelParams, State, Tolerances};
use crate::point::Vec3;

pub const REFERENCE_ALPHA: [f64; 6] = [0.0, 0.0, 1.0, 3.0, 0.0, 0.5];

pub fn params(epsilon: f64, alpha: [f64; 6]) -> ModelParams {
    ModelParams {
        epsilon,
        potential: SingularPotential::new(1e-3).unwrap(),
        c_bar: 2.0,
        leslie: LeslieCoefficients::new(alpha).unwrap(),
        tol: Tolerances::default(),
    }
}

/// Uniform state at the energy minimum: `c = 1`, `v = 0`, aligned `n`.
pub fn rest_state(grid: &Grid) -> State {
    let r = MINIMIZER_NORM_SQ.sqrt();
    State {
        time: 0.0,
        c_p: ScalarField::constant(grid, 1.0),
        c_m: ScalarField::constant(grid, 1.0),
        phi: ScalarField::zeros(grid),
        v: VectorField::zeros(grid),
        n: VectorField::from_fn(grid, |_| [r, 0.0, 0.0]),
    }
}

/// Divergence-free shear pair `(sin x2, sin x1)` scaled by `a`.
pub fn solenoidal(grid: &Grid, a: f64) -> VectorField {
    VectorField::from_fn(grid, |x| [a * x[1].sin(), a * x[0].sin(), 0.0])
}

/// Periodic trapezoid rule on `[0, 2π)`, spectrally accurate for smooth `f`.
pub fn periodic_quadrature(m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = std::f64::consts::TAU / m as f64;
    (0..m).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial with every `|k_j| ≤ kmax`, no mean.
pub fn band_limited(grid: &Grid, kmax: i64, rng: &mut impl Rng) -> ScalarField {
    let d = grid.dim();
    let mut modes = Vec::new();
    let third = if d == 3 { kmax } else { 0 };
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            for c in -third..=third {
                if (a, b, c) != (0, 0, 0) {
                    modes.push(([a as f64, b as f64, c as f64], rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
            }
        }
    }
    ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(k, p, q)| {
                let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                p * ph.cos() + q * ph.sin()
            })
            .sum::<f64>()
            / modes.len() as f64
    })
}

pub fn band_limited_vector(grid: &Grid, kmax: i64, rng: &mut impl Rng) -> VectorField {
    VectorField::from_components((0..grid.dim()).map(|_| band_limited(grid, kmax, rng)).collect())
}

/// Smooth director with `sup |n| = sup_norm`.
pub fn director(grid: &Grid, sup_norm: f64, rng: &mut impl Rng) -> VectorField {
    let raw = band_limited_vector(grid, 2, rng);
    let s = sup_norm / raw.sup_norm();
    VectorField::from_points(grid, |i| {
        let p = raw.at(i);
        [s * p[0], s * p[1], s * p[2]]
    })
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec3 {
    loop {
        let mut v = [0.0f64; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 0.1 && r <= 1.0 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_diff_vec(a: &VectorField, b: &VectorField) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| max_diff(x.values(), y.values()))
        .fold(0.0, f64::max)
}
