use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Rows per parallel FFT batch.
const ROW_BATCH: usize = 16;

/// Square 2-D complex FFT on an `n x n` row-major buffer.
///
/// The forward transform is unnormalized; the inverse divides by `n^2`, so
/// `inverse(forward(u)) == u` up to round-off. Spectral coefficients use the
/// same layout as the physical data: mode `(mx, my)` is at `my * n + mx`.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Inverse transform, returning the real part scaled by `1 / n^2`.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(buf.len(), n * n);
        fft_rows(buf, n, plan);
        let mut t = transpose(buf, n);
        fft_rows(&mut t, n, plan);
        let back = transpose(&t, n);
        buf.copy_from_slice(&back);
    }
}

fn fft_rows(buf: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    buf.par_chunks_mut(n * ROW_BATCH).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(chunk, &mut scratch);
    });
}

fn transpose(src: &[Complex64], n: usize) -> Vec<Complex64> {
    const B: usize = 32;
    let mut dst = vec![Complex64::new(0.0, 0.0); n * n];
    for jb in (0..n).step_by(B) {
        for ib in (0..n).step_by(B) {
            for j in jb..(jb + B).min(n) {
                for i in ib..(ib + B).min(n) {
                    dst[i * n + j] = src[j * n + i];
                }
            }
        }
    }
    dst
}

/// Signed integer wavenumber for FFT index `m` on an `n`-point axis.
/// The Nyquist index `n / 2` maps to `-n / 2`.
#[inline]
pub(crate) fn signed_mode(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}
