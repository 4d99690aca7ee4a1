//! Derivatives of a state that several right-hand sides share.

use crate::fields::{gradient, laplacian, vector_gradient, TensorField, VectorField};
use crate::model::State;
use crate::point::{sym_skew, Mat3};

pub(crate) struct Derived {
    pub grad_phi: VectorField,
    /// `∂_j n_i` at `(i, j)`.
    pub grad_n: TensorField,
    pub lap_n: VectorField,
    /// `∂_j v_i` at `(i, j)`.
    pub grad_v: TensorField,
}

impl Derived {
    pub fn of(state: &State) -> Self {
        Derived {
            grad_phi: gradient(&state.phi),
            grad_n: vector_gradient(&state.n),
            lap_n: laplacian(&state.n),
            grad_v: vector_gradient(&state.v),
        }
    }

    /// `(D(v), Ω(v))` at a grid point.
    #[inline]
    pub fn strain_spin(&self, idx: usize) -> (Mat3, Mat3) {
        sym_skew(&self.grad_v.at(idx))
    }
}
