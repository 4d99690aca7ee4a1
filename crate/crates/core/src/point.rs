//! Pointwise 3-vector and 3x3-matrix algebra. Two-dimensional fields are
//! embedded with a zero third component.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0; 3];
pub const ZERO33: Mat3 = [[0.0; 3]; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: &Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn mat_vec(m: &Mat3, a: &Vec3) -> Vec3 {
    [dot(&m[0], a), dot(&m[1], a), dot(&m[2], a)]
}

#[inline]
pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    let mut m = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

#[inline]
pub fn transpose(m: &Mat3) -> Mat3 {
    let mut t = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Frobenius inner product `A:B = A_ij B_ij`.
#[inline]
pub fn contract(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        s += dot(&a[i], &b[i]);
    }
    s
}

/// Symmetric and antisymmetric parts of a velocity gradient `G_ij = ∂_j v_i`.
#[inline]
pub fn sym_skew(g: &Mat3) -> (Mat3, Mat3) {
    let mut d = ZERO33;
    let mut w = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = 0.5 * (g[i][j] + g[j][i]);
            w[i][j] = 0.5 * (g[i][j] - g[j][i]);
        }
    }
    (d, w)
}
