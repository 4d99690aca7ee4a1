//! Periodic scalar, vector and tensor fields on the flat torus `[0, 2π)^d`
//! together with their spectral calculus.
//!
//! Grid points are stored row-major with axis 0 (coordinate `x₁`) varying
//! slowest. Physical values live in the field types; Fourier coefficients
//! live in [`Spectrum`], so the type records which representation is current.

mod fft;
mod ops;
pub mod snapshot;

pub use ops::*;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::point::{Mat3, Vec3, ZERO3, ZERO33};

pub const TWO_PI: f64 = 2.0 * PI;

/// Uniform periodic grid with `n` points per axis and side length `2π`.
///
/// Cloning is cheap: the transform plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    len: usize,
    transform: fft::Transform,
    /// `|k|²` per flat mode index, Nyquist wavenumber included.
    k_sq: Vec<f64>,
    /// First-derivative wavenumbers per axis, with the Nyquist entry zeroed.
    k_deriv: Vec<Vec<f64>>,
    /// Modes retained by the 2/3 rule.
    keep: Vec<bool>,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        let len = n.pow(dim as u32);
        let half = n as i64 / 2;
        let axis_k = |i: usize| -> i64 {
            let i = i as i64;
            if i < half {
                i
            } else {
                i - n as i64
            }
        };
        let mut k_sq = vec![0.0; len];
        let mut k_deriv = vec![vec![0.0; len]; dim];
        let mut keep = vec![true; len];
        for idx in 0..len {
            let mi = multi_index(idx, dim, n);
            for (axis, &i) in mi[..dim].iter().enumerate() {
                let k = axis_k(i);
                k_sq[idx] += (k * k) as f64;
                k_deriv[axis][idx] = if k == -half { 0.0 } else { k as f64 };
                if 3 * k.abs() > n as i64 {
                    keep[idx] = false;
                }
            }
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                len,
                transform: fft::Transform::new(dim, n),
                k_sq,
                k_deriv,
                keep,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.inner.n as f64
    }

    /// Volume of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        TWO_PI.powi(self.inner.dim as i32)
    }

    /// Physical coordinates of a grid point, zero-padded to three entries.
    pub fn coords(&self, idx: usize) -> Vec3 {
        let mi = multi_index(idx, self.inner.dim, self.inner.n);
        let h = self.spacing();
        let mut x = ZERO3;
        for a in 0..self.inner.dim {
            x[a] = mi[a] as f64 * h;
        }
        x
    }

    /// Integer wavenumbers of a spectral index, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        let n = self.inner.n;
        let mi = multi_index(idx, self.inner.dim, n);
        let mut k = [0i64; 3];
        for a in 0..self.inner.dim {
            let i = mi[a] as i64;
            k[a] = if i < n as i64 / 2 { i } else { i - n as i64 };
        }
        k
    }

    pub fn k_sq(&self) -> &[f64] {
        &self.inner.k_sq
    }

    pub fn k_deriv(&self, axis: usize) -> &[f64] {
        &self.inner.k_deriv[axis]
    }

    pub(crate) fn dealias_mask(&self) -> &[bool] {
        &self.inner.keep
    }

    pub(crate) fn transform(&self) -> &fft::Transform {
        &self.inner.transform
    }

    fn ensure_same(&self, other: &Grid) {
        assert!(self == other, "fields live on different grids");
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim && self.inner.n == other.inner.n)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}D, N={})", self.inner.dim, self.inner.n)
    }
}

fn multi_index(mut idx: usize, dim: usize, n: usize) -> [usize; 3] {
    let mut mi = [0usize; 3];
    for a in (0..dim).rev() {
        mi[a] = idx % n;
        idx /= n;
    }
    mi
}

/// Real-valued periodic scalar field sampled on the grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Vec3) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectral(&self) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self.grid.transform().forward_real(&self.values),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        self.grid.ensure_same(&other.grid);
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &ScalarField) {
        self.grid.ensure_same(&other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Pointwise average of two fields.
    pub fn midpoint(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| 0.5 * (a + b))
    }
}

/// Fourier coefficients of a real field, normalised so that mode 0 is the mean.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Spectrum {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_physical(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.grid.transform().inverse_real(&self.coeffs),
        }
    }

    /// Applies a mode-wise multiplier `c(k) ↦ f(k, c(k))`.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(k, &c)| f(k, c)).collect(),
        }
    }

    /// Spectral `∂/∂x_axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let kd = self.grid.k_deriv(axis);
        self.map_modes(|k, c| Complex64::new(-kd[k] * c.im, kd[k] * c.re))
    }

    pub fn laplacian(&self) -> Self {
        let ks = self.grid.k_sq();
        self.map_modes(|k, c| -ks[k] * c)
    }

    /// Zeroes every mode with some `|k_j| > n/3`.
    pub fn dealias_in_place(&mut self) {
        for (c, &keep) in self.coeffs.iter_mut().zip(self.grid.dealias_mask()) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &Spectrum) {
        self.grid.ensure_same(&other.grid);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// Real part of `Σ conj(a_k) b_k`, i.e. the grid mean of the product of
    /// the physical fields.
    pub fn dot(&self, other: &Spectrum) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }
}

/// Vector field with `dim` components.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Self {
        let grid = comps[0].grid().clone();
        assert_eq!(comps.len(), grid.dim(), "component count must equal the grid dimension");
        for c in &comps {
            grid.ensure_same(c.grid());
        }
        VectorField { grid, comps }
    }

    /// Builds a field from a function of position; entries beyond `dim` are ignored.
    pub fn from_fn(grid: &Grid, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self::from_points(grid, |idx| f(grid.coords(idx)))
    }

    /// Builds a field from a function of the flat grid index.
    pub fn from_points(grid: &Grid, f: impl Fn(usize) -> Vec3) -> Self {
        let d = grid.dim();
        let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d];
        for idx in 0..grid.len() {
            let v = f(idx);
            for a in 0..d {
                comps[a].push(v[a]);
            }
        }
        VectorField {
            grid: grid.clone(),
            comps: comps
                .into_iter()
                .map(|c| ScalarField::from_values(grid, c))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.comps[a]
    }

    /// Value at a grid point, zero-padded to three entries.
    #[inline]
    pub fn at(&self, idx: usize) -> Vec3 {
        let mut v = ZERO3;
        for (a, c) in self.comps.iter().enumerate() {
            v[a] = c.values[idx];
        }
        v
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| crate::point::norm_sq(&self.at(i)).sqrt())
            .collect();
        ScalarField::from_values(&self.grid, values)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| crate::point::norm_sq(&self.at(i)))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn add_scaled(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(s, b);
        }
    }

    pub fn midpoint(&self, other: &VectorField) -> Self {
        VectorField {
            grid: self.grid.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.midpoint(b))
                .collect(),
        }
    }

    pub fn to_spectral(&self) -> Vec<Spectrum> {
        spectra_of(&self.comps)
    }

    pub fn from_spectra(spectra: &[Spectrum]) -> Self {
        VectorField::from_components(physical_of(spectra))
    }
}

/// Rank-2 tensor field, components stored row-major as `T_ij` at `i * dim + j`.
#[derive(Clone, Debug)]
pub struct TensorField {
    grid: Grid,
    comps: Vec<ScalarField>,
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        let d = grid.dim();
        TensorField {
            grid: grid.clone(),
            comps: (0..d * d).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    /// Builds a tensor field from a function of the flat grid index.
    pub fn from_points(grid: &Grid, f: impl Fn(usize) -> Mat3) -> Self {
        let d = grid.dim();
        let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d * d];
        for idx in 0..grid.len() {
            let m = f(idx);
            for i in 0..d {
                for j in 0..d {
                    comps[i * d + j].push(m[i][j]);
                }
            }
        }
        TensorField {
            grid: grid.clone(),
            comps: comps
                .into_iter()
                .map(|c| ScalarField::from_values(grid, c))
                .collect(),
        }
    }

    pub(crate) fn from_components(grid: &Grid, comps: Vec<ScalarField>) -> Self {
        assert_eq!(comps.len(), grid.dim() * grid.dim());
        TensorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.grid.dim() + j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    /// Value at a grid point, zero-padded to 3x3.
    #[inline]
    pub fn at(&self, idx: usize) -> Mat3 {
        let d = self.grid.dim();
        let mut m = ZERO33;
        for i in 0..d {
            for j in 0..d {
                m[i][j] = self.comps[i * d + j].values[idx];
            }
        }
        m
    }

    pub fn add_scaled(&mut self, s: f64, other: &TensorField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(s, b);
        }
    }
}

/// Forward transforms of a list of real fields, two at a time.
pub(crate) fn spectra_of(fields: &[ScalarField]) -> Vec<Spectrum> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let grid = pair[0].grid();
        if pair.len() == 2 {
            let (a, b) = grid
                .transform()
                .forward_pair(pair[0].values(), pair[1].values());
            out.push(Spectrum { grid: grid.clone(), coeffs: a });
            out.push(Spectrum { grid: grid.clone(), coeffs: b });
        } else {
            out.push(pair[0].to_spectral());
        }
    }
    out
}

/// Inverse transforms of a list of spectra, two at a time.
pub(crate) fn physical_of(spectra: &[Spectrum]) -> Vec<ScalarField> {
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let grid = pair[0].grid();
        if pair.len() == 2 {
            let (a, b) = grid
                .transform()
                .inverse_pair(pair[0].coeffs(), pair[1].coeffs());
            out.push(ScalarField::from_values(grid, a));
            out.push(ScalarField::from_values(grid, b));
        } else {
            out.push(pair[0].to_physical());
        }
    }
    out
}
