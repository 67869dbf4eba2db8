//! Zero-padded 2-D FFT convolution of an n x n block.
//!
//! Spectra are kept in transposed layout (index kx * big + ky) so that the
//! padded columns never have to be transposed back.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    big: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Smallest 2^a 3^b 5^c that is at least `m`.
pub fn smooth_size(m: usize) -> usize {
    let mut k = m.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

fn transpose(src: &[C64], rows: usize, cols: usize, dst: &mut [C64]) {
    const B: usize = 32;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl Fft2 {
    pub fn new(n: usize, big: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { n, big, fwd: planner.plan_fft_forward(big), inv: planner.plan_fft_inverse(big) }
    }

    pub fn big(&self) -> usize {
        self.big
    }

    /// Spectrum of the block placed in the lower-left corner of the padded square.
    pub fn forward(&self, block: &[C64]) -> Vec<C64> {
        let (n, big) = (self.n, self.big);
        debug_assert_eq!(block.len(), n * n);
        let mut rows = vec![C64::new(0.0, 0.0); n * big];
        for j in 0..n {
            rows[j * big..j * big + n].copy_from_slice(&block[j * n..(j + 1) * n]);
        }
        self.fwd.process(&mut rows);
        // rows is n x big; its transpose is big x n, zero-extended to big x big.
        let mut cols = vec![C64::new(0.0, 0.0); big * big];
        let mut t = vec![C64::new(0.0, 0.0); big * n];
        transpose(&rows, n, big, &mut t);
        for kx in 0..big {
            cols[kx * big..kx * big + n].copy_from_slice(&t[kx * n..(kx + 1) * n]);
        }
        self.fwd.process(&mut cols);
        cols
    }

    /// Spectrum of a full big x big array given row-major as [y][x].
    pub fn forward_full(&self, mut full: Vec<C64>) -> Vec<C64> {
        let big = self.big;
        self.fwd.process(&mut full);
        let mut t = vec![C64::new(0.0, 0.0); big * big];
        transpose(&full, big, big, &mut t);
        self.fwd.process(&mut t);
        t
    }

    /// Inverse transform of a transposed-layout spectrum, cropped to the block.
    pub fn inverse(&self, mut spec: Vec<C64>) -> Vec<C64> {
        let (n, big) = (self.n, self.big);
        self.inv.process(&mut spec);
        // spec is now [kx][y]; keep y < n.
        let mut part = vec![C64::new(0.0, 0.0); big * n];
        for kx in 0..big {
            part[kx * n..(kx + 1) * n].copy_from_slice(&spec[kx * big..kx * big + n]);
        }
        let mut rows = vec![C64::new(0.0, 0.0); n * big];
        transpose(&part, big, n, &mut rows);
        self.inv.process(&mut rows);
        let scale = 1.0 / (big * big) as f64;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                out[j * n + i] = rows[j * big + i] * scale;
            }
        }
        out
    }

    pub fn apply(&self, block: &[C64], multiplier: &[C64]) -> Vec<C64> {
        let mut spec = self.forward(block);
        for (s, m) in spec.iter_mut().zip(multiplier) {
            *s *= m;
        }
        self.inverse(spec)
    }

    /// Angular wavenumbers of the padded lattice with spacing h, in FFT order.
    pub fn wavenumbers(&self, h: f64) -> Vec<f64> {
        let big = self.big;
        (0..big)
            .map(|q| {
                let q = if q <= big / 2 { q as f64 } else { q as f64 - big as f64 };
                2.0 * std::f64::consts::PI * q / (big as f64 * h)
            })
            .collect()
    }
}
