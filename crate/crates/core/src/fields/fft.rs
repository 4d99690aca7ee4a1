//! Multi-dimensional complex FFT built from 1-D rustfft plans applied axis by axis.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward transforms are normalised by `1/len`, so the zero mode is the grid mean.
pub(crate) struct Transform {
    n: usize,
    dim: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Flat index of the mode `-k` for each mode `k`.
    negated: Vec<usize>,
}

impl Transform {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let len = n.pow(dim as u32);
        let negated = (0..len)
            .map(|idx| {
                let mut rem = idx;
                let mut out = 0;
                let mut place = 1;
                for _ in 0..dim {
                    let i = rem % n;
                    rem /= n;
                    out += ((n - i) % n) * place;
                    place *= n;
                }
                out
            })
            .collect();
        Transform {
            n,
            dim,
            len,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            negated,
        }
    }

    /// Flat index of the mode `-k` for the mode stored at `idx`.
    #[cfg(test)]
    pub(crate) fn negated_index(&self, idx: usize) -> usize {
        self.negated[idx]
    }

    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len);
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply(&mut buf, self.forward.as_ref());
        let s = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    pub(crate) fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.len);
        let mut buf = coeffs.to_vec();
        self.apply(&mut buf, self.inverse.as_ref());
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Transforms two real arrays with a single complex FFT.
    pub(crate) fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.apply(&mut buf, self.forward.as_ref());
        let s = 0.5 / self.len as f64;
        let mut fa = Vec::with_capacity(self.len);
        let mut fb = Vec::with_capacity(self.len);
        for (k, z) in buf.iter().enumerate() {
            let zc = buf[self.negated[k]].conj();
            fa.push((z + zc) * s);
            // (z - zc) / (2i)
            let d = (z - zc) * s;
            fb.push(Complex64::new(d.im, -d.re));
        }
        (fa, fb)
    }

    /// Inverse of two Hermitian spectra with a single complex FFT.
    pub(crate) fn inverse_pair(&self, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = fa
            .iter()
            .zip(fb)
            .map(|(x, y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.apply(&mut buf, self.inverse.as_ref());
        buf.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    fn apply(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // Last axis is contiguous: rustfft processes every length-n chunk.
        fft.process_with_scratch(buf, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut stride = n;
        let mut lines: Vec<Complex64> = Vec::new();
        for _ in 1..self.dim {
            let block = stride * n;
            lines.resize(block, Complex64::new(0.0, 0.0));
            for start in (0..self.len).step_by(block) {
                let chunk = &mut buf[start..start + block];
                for s in 0..stride {
                    for j in 0..n {
                        lines[s * n + j] = chunk[j * stride + s];
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                for s in 0..stride {
                    for j in 0..n {
                        chunk[j * stride + s] = lines[s * n + j];
                    }
                }
            }
            stride = block;
        }
    }
}
