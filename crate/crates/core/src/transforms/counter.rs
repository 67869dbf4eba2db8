//! Smooth remainder kernels of the counter-term operators.
//!
//! With B = 1/(w_hat - z) and Q = (w - w_hat)/(z - w_hat) = 1 + B (z - w),
//!   Q^m / (z - w)       = 1/(z - w) + B * sum_{j<m} Q^j,
//!   d/dz of that        = -1/(z - w)^2 + B^2 * sum_{j<m} (j+1) Q^j.
//! Since Q^j B^(j+1) = (w_hat - w)^j B^(j+1), both remainders are polynomials
//! in u = 1/(alpha - beta z) with per-source coefficients, where
//! (alpha, beta) = (w_hat, 1) in general and (1, conj(w)) for the disk.

use num_complex::Complex64 as C64;

pub(crate) struct CounterSources {
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    /// coef[j][k]: coefficient of u^(j + offset) for source k.
    pub coef: Vec<Vec<C64>>,
}

const LANES: usize = 8;

/// out[t] = sum_k sum_j coef[j][k] u_kt^(j + offset), u_kt = 1/(alpha_k - beta_k z_t).
pub(crate) fn counter_sum(src: &CounterSources, targets: &[C64], offset: u32) -> Vec<C64> {
    let m = src.coef.len();
    let nt = targets.len();
    if m == 0 || nt == 0 {
        return vec![C64::new(0.0, 0.0); nt];
    }
    let padded = nt.div_ceil(LANES) * LANES;
    let mut zr = vec![0.0; padded];
    let mut zi = vec![0.0; padded];
    for (t, z) in targets.iter().enumerate() {
        zr[t] = z.re;
        zi[t] = z.im;
    }
    let mut or = vec![0.0; padded];
    let mut oi = vec![0.0; padded];
    let mut cr = vec![0.0; m];
    let mut ci = vec![0.0; m];
    for k in 0..src.alpha.len() {
        let mut nonzero = false;
        for j in 0..m {
            cr[j] = src.coef[j][k].re;
            ci[j] = src.coef[j][k].im;
            nonzero |= cr[j] != 0.0 || ci[j] != 0.0;
        }
        if !nonzero {
            continue;
        }
        let (ar, ai) = (src.alpha[k].re, src.alpha[k].im);
        let (br, bi) = (src.beta[k].re, src.beta[k].im);
        for c in 0..padded / LANES {
            let base = c * LANES;
            let mut ur = [0.0; LANES];
            let mut ui = [0.0; LANES];
            for l in 0..LANES {
                let (x, y) = (zr[base + l], zi[base + l]);
                let dr = ar - (br * x - bi * y);
                let di = ai - (br * y + bi * x);
                let inv = 1.0 / (dr * dr + di * di);
                ur[l] = dr * inv;
                ui[l] = -di * inv;
            }
            let mut accr = [cr[m - 1]; LANES];
            let mut acci = [ci[m - 1]; LANES];
            for j in (0..m - 1).rev() {
                for l in 0..LANES {
                    let r = accr[l] * ur[l] - acci[l] * ui[l] + cr[j];
                    let i = accr[l] * ui[l] + acci[l] * ur[l] + ci[j];
                    accr[l] = r;
                    acci[l] = i;
                }
            }
            for _ in 0..offset {
                for l in 0..LANES {
                    let r = accr[l] * ur[l] - acci[l] * ui[l];
                    let i = accr[l] * ui[l] + acci[l] * ur[l];
                    accr[l] = r;
                    acci[l] = i;
                }
            }
            for l in 0..LANES {
                or[base + l] += accr[l];
                oi[base + l] += acci[l];
            }
        }
    }
    (0..nt).map(|t| C64::new(or[t], oi[t])).collect()
}

/// Disk sources: alpha = 1, beta = conj(zeta), weights already include the
/// field value, the area element and 1/pi.
pub(crate) fn disk_sources(zeta: &[C64], weighted: &[C64], m: usize, beurling: bool) -> CounterSources {
    let alpha = vec![C64::new(1.0, 0.0); zeta.len()];
    let beta: Vec<C64> = zeta.iter().map(|z| z.conj()).collect();
    let mut coef = vec![Vec::with_capacity(zeta.len()); m];
    for (z, &w) in zeta.iter().zip(weighted) {
        let decay = 1.0 - z.norm_sqr();
        let lead = if beurling { z.conj() * z.conj() } else { z.conj() };
        let mut pw = 1.0;
        for (j, c) in coef.iter_mut().enumerate() {
            let mult = if beurling { (j + 1) as f64 } else { 1.0 };
            c.push(w * lead * pw * mult);
            pw *= decay;
        }
    }
    CounterSources { alpha, beta, coef }
}

/// General sources with reflected points w_hat: alpha = w_hat, beta = 1.
pub(crate) fn reflected_sources(
    w: &[C64],
    w_hat: &[C64],
    weighted: &[C64],
    m: usize,
    beurling: bool,
) -> CounterSources {
    let beta = vec![C64::new(1.0, 0.0); w.len()];
    let mut coef = vec![Vec::with_capacity(w.len()); m];
    for ((&p, &ph), &wt) in w.iter().zip(w_hat).zip(weighted) {
        let gap = ph - p;
        let mut pw = C64::new(1.0, 0.0);
        for (j, c) in coef.iter_mut().enumerate() {
            let mult = if beurling { (j + 1) as f64 } else { 1.0 };
            c.push(wt * pw * mult);
            pw *= gap;
        }
    }
    CounterSources { alpha: w_hat.to_vec(), beta, coef }
}
