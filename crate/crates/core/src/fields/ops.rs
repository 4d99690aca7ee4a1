//! Spectral calculus on the torus. First derivatives use the wavenumber table
//! with the Nyquist entry zeroed, which keeps `gradient` and `-divergence`
//! exact adjoints under the trapezoid inner product.

use super::{physical_of, spectra_of, Complex64, Grid, ScalarField, Spectrum, TensorField, VectorField};

/// Field kinds that can be pushed through a mode-wise spectral map.
pub trait Periodic: Sized {
    fn map_spectra(&self, f: impl Fn(&Spectrum) -> Spectrum) -> Self;
}

impl Periodic for ScalarField {
    fn map_spectra(&self, f: impl Fn(&Spectrum) -> Spectrum) -> Self {
        f(&self.to_spectral()).to_physical()
    }
}

impl Periodic for VectorField {
    fn map_spectra(&self, f: impl Fn(&Spectrum) -> Spectrum) -> Self {
        let mapped: Vec<Spectrum> = self.to_spectral().iter().map(f).collect();
        VectorField::from_spectra(&mapped)
    }
}

impl Periodic for TensorField {
    fn map_spectra(&self, f: impl Fn(&Spectrum) -> Spectrum) -> Self {
        let mapped: Vec<Spectrum> = spectra_of(self.components()).iter().map(f).collect();
        TensorField::from_components(self.grid(), physical_of(&mapped))
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    gradient_of_spectrum(&f.to_spectral())
}

pub fn gradient_of_spectrum(s: &Spectrum) -> VectorField {
    let derivs: Vec<Spectrum> = (0..s.grid().dim()).map(|a| s.derivative(a)).collect();
    VectorField::from_spectra(&derivs)
}

/// Spectral divergence `Σ_j i k_j û_j` of a list of component spectra.
pub fn divergence_of_spectra(u: &[Spectrum]) -> Spectrum {
    let grid = u[0].grid().clone();
    let mut out = Spectrum::zeros(&grid);
    for (axis, comp) in u.iter().enumerate() {
        let kd = grid.k_deriv(axis);
        for ((o, c), &k) in out.coeffs_mut().iter_mut().zip(comp.coeffs()).zip(kd) {
            *o += Complex64::new(-k * c.im, k * c.re);
        }
    }
    out
}

pub fn divergence(u: &VectorField) -> ScalarField {
    divergence_of_spectra(&u.to_spectral()).to_physical()
}

pub fn laplacian<F: Periodic>(f: &F) -> F {
    f.map_spectra(Spectrum::laplacian)
}

/// 2/3-rule truncation: every mode with some `|k_j| > n/3` is removed.
pub fn dealias<F: Periodic>(f: &F) -> F {
    f.map_spectra(|s| {
        let mut s = s.clone();
        s.dealias_in_place();
        s
    })
}

/// Velocity-gradient convention: `T_ij = ∂_j u_i`.
pub fn vector_gradient(u: &VectorField) -> TensorField {
    let d = u.grid().dim();
    let spectra = u.to_spectral();
    let mut derivs = Vec::with_capacity(d * d);
    for s in &spectra {
        for j in 0..d {
            derivs.push(s.derivative(j));
        }
    }
    TensorField::from_components(u.grid(), physical_of(&derivs))
}

/// Row-wise divergence `(div T)_i = Σ_j ∂_j T_ij`, returned as spectra.
/// With `dealiased`, each component of `T` is truncated first.
pub fn tensor_divergence_spectra(t: &TensorField, dealiased: bool) -> Vec<Spectrum> {
    let d = t.grid().dim();
    let mut spectra = spectra_of(t.components());
    if dealiased {
        spectra.iter_mut().for_each(Spectrum::dealias_in_place);
    }
    spectra.chunks(d).map(divergence_of_spectra).collect()
}

pub fn tensor_divergence(t: &TensorField) -> VectorField {
    VectorField::from_spectra(&tensor_divergence_spectra(t, false))
}

/// Divergence of a vector field after 2/3-rule truncation, as a spectrum.
pub fn dealiased_divergence_spectrum(u: &VectorField) -> Spectrum {
    let mut spectra = u.to_spectral();
    spectra.iter_mut().for_each(Spectrum::dealias_in_place);
    divergence_of_spectra(&spectra)
}

/// Removes the gradient part of each mode: `û ← û − k (k·û)/|k|²`.
/// The zero mode is left untouched.
pub fn leray_project_spectra(u: &mut [Spectrum]) {
    let grid: Grid = u[0].grid().clone();
    let d = grid.dim();
    for idx in 0..grid.len() {
        let mut ksq = 0.0;
        let mut kdotu = Complex64::new(0.0, 0.0);
        for (a, comp) in u.iter().enumerate() {
            let k = grid.k_deriv(a)[idx];
            ksq += k * k;
            kdotu += k * comp.coeffs()[idx];
        }
        if ksq == 0.0 {
            continue;
        }
        let factor = kdotu / ksq;
        for (a, comp) in u.iter_mut().enumerate().take(d) {
            let k = grid.k_deriv(a)[idx];
            comp.coeffs_mut()[idx] -= k * factor;
        }
    }
}

pub fn leray_project(u: &VectorField) -> VectorField {
    let mut spectra = u.to_spectral();
    leray_project_spectra(&mut spectra);
    VectorField::from_spectra(&spectra)
}

/// Trapezoid quadrature over the torus: grid mean times `(2π)^dim`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.mean() * f.grid().volume()
}

/// Integral of a pointwise expression over the grid.
pub fn integrate_points(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    let sum: f64 = (0..grid.len()).map(f).sum();
    sum / grid.len() as f64 * grid.volume()
}

/// Discrete L² inner product.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    integrate_points(f.grid(), |i| f.values()[i] * g.values()[i])
}

pub fn inner_vector(u: &VectorField, w: &VectorField) -> f64 {
    u.components()
        .iter()
        .zip(w.components())
        .map(|(a, b)| inner(a, b))
        .sum()
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    inner(f, f).sqrt()
}

pub fn l2_norm_vector(u: &VectorField) -> f64 {
    inner_vector(u, u).sqrt()
}

pub fn l2_norm_tensor(t: &TensorField) -> f64 {
    t.components().iter().map(|c| inner(c, c)).sum::<f64>().sqrt()
}

/// `(∫|f|^p)^{1/p}` of a scalar field.
pub fn lp_norm(f: &ScalarField, p: f64) -> f64 {
    integrate_points(f.grid(), |i| f.values()[i].abs().powf(p)).powf(1.0 / p)
}
