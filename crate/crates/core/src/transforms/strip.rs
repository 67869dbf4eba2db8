//! The strip operators, mode by mode in phi.
//!
//! For f = sum_k f_k(xi) e^{i k phi} the Cauchy-type operator returns
//! u = sum_k u_k e^{i k phi} with (u_k' - k u_k) / 2 = f_k, the solution that
//! vanishes as xi -> -inf (k <= 0) or xi -> +inf (k >= 1). The Beurling-type
//! operator is f + sum_k k u_k e^{i k phi}, whose xi-multiplier
//! (i w + k)/(i w - k) has unit modulus.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::fft2::smooth_size;
use crate::grid::SampledField;
use crate::transforms::Backend;

struct StripPlan {
    n_phi: usize,
    n_xi: usize,
    pad: usize,
    dxi: f64,
    phi_fwd: Arc<dyn Fft<f64>>,
    phi_inv: Arc<dyn Fft<f64>>,
    xi_fwd: Arc<dyn Fft<f64>>,
    xi_inv: Arc<dyn Fft<f64>>,
    omega: Vec<f64>,
    gauss: Vec<f64>,
}

type Key = (usize, usize, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<StripPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<StripPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(n_phi: usize, n_xi: usize, dxi: f64) -> Arc<StripPlan> {
    let key = (n_phi, n_xi, dxi.to_bits());
    if let Some(p) = cache().lock().expect("plan cache").get(&key) {
        return p.clone();
    }
    // The slowest modes (|k| = 1) decay like e^{-|xi|}; 40 units of padding
    // keep their periodic images below rounding.
    let extra = n_xi.max((40.0 / dxi).ceil() as usize).max(64);
    let pad = smooth_size(n_xi + extra);
    let mut planner = FftPlanner::new();
    let omega = (0..pad)
        .map(|q| {
            let q = if q <= pad / 2 { q as f64 } else { q as f64 - pad as f64 };
            2.0 * PI * q / (pad as f64 * dxi)
        })
        .collect();
    // Unit-mass Gaussian centred in the padding, used to make the k = 0 mode
    // mean-free before its spectral antiderivative is taken.
    let width = (pad - n_xi) as f64 * dxi / 16.0;
    let centre = (n_xi as f64 + (pad - n_xi) as f64 / 2.0) * dxi;
    let gauss = (0..pad)
        .map(|i| {
            let x = (i as f64 + 0.5) * dxi - centre;
            (-(x * x) / (2.0 * width * width)).exp() / (width * (2.0 * PI).sqrt())
        })
        .collect();
    let p = Arc::new(StripPlan {
        n_phi,
        n_xi,
        pad,
        dxi,
        phi_fwd: planner.plan_fft_forward(n_phi),
        phi_inv: planner.plan_fft_inverse(n_phi),
        xi_fwd: planner.plan_fft_forward(pad),
        xi_inv: planner.plan_fft_inverse(pad),
        omega,
        gauss,
    });
    let mut c = cache().lock().expect("plan cache");
    if c.len() > 8 {
        c.clear();
    }
    c.insert(key, p.clone());
    p
}

fn mode_number(q: usize, n: usize) -> i64 {
    if q < n.div_ceil(2) {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

/// Fourier coefficients along phi, returned mode-major: modes[q][i_xi].
fn to_modes(field: &SampledField, p: &StripPlan) -> Vec<Vec<C64>> {
    let (n, rows) = (p.n_phi, p.n_xi);
    let mut buf = field.values.clone();
    p.phi_fwd.process(&mut buf);
    (0..n).map(|q| (0..rows).map(|i| buf[i * n + q]).collect()).collect()
}

fn from_modes(modes: &[Vec<C64>], p: &StripPlan) -> Vec<C64> {
    let (n, rows) = (p.n_phi, p.n_xi);
    let mut buf = vec![C64::new(0.0, 0.0); n * rows];
    for (q, col) in modes.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            buf[i * n + q] = *v;
        }
    }
    p.phi_inv.process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter().map(|v| v * s).collect()
}

fn spectral_mode(fk: &[C64], k: i64, p: &StripPlan) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); p.pad];
    buf[..p.n_xi].copy_from_slice(fk);
    if k == 0 {
        let total: C64 = fk.iter().sum::<C64>() * p.dxi;
        for (b, g) in buf.iter_mut().zip(&p.gauss) {
            *b -= total * g;
        }
    }
    p.xi_fwd.process(&mut buf);
    for (b, &w) in buf.iter_mut().zip(&p.omega) {
        let den = C64::new(-(k as f64), w);
        *b = if den.norm() == 0.0 { C64::new(0.0, 0.0) } else { *b * 2.0 / den };
    }
    p.xi_inv.process(&mut buf);
    let s = 1.0 / p.pad as f64;
    if k == 0 {
        let base = buf[p.pad - 1];
        buf[..p.n_xi].iter().map(|v| (v - base) * s).collect()
    } else {
        buf[..p.n_xi].iter().map(|v| v * s).collect()
    }
}

const GL_NODES: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 10] = [
    0.066_671_344_308_688_1,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982,
    0.269_266_719_309_996_4,
    0.295_524_224_714_752_9,
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Exact-exponential recursion over one cell with a four-point interpolant.
fn recursive_mode(fk: &[C64], k: i64, dxi: f64) -> Vec<C64> {
    let n = fk.len();
    let kf = k as f64;
    // cubic Lagrange basis on offsets -1, 0, 1, 2 (in cells), integrated
    // against the exponential factor over [0, 1] cell
    let mut w = [0.0; 4];
    let sub = if (kf * dxi).abs() > 8.0 { 8 } else { 1 };
    for part in 0..sub {
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let t = (part as f64 + 0.5 * (x + 1.0)) / sub as f64;
            let s = t * dxi;
            let e = if k < 0 {
                (kf * (dxi - s)).exp()
            } else if k > 0 {
                (-kf * s).exp()
            } else {
                1.0
            };
            let l = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            for q in 0..4 {
                w[q] += 0.5 * wt / sub as f64 * dxi * e * l[q];
            }
        }
    }
    let at = |i: isize| if i < 0 || i >= n as isize { C64::new(0.0, 0.0) } else { fk[i as usize] };
    let cell = |i: usize| {
        let i = i as isize;
        at(i - 1) * w[0] + at(i) * w[1] + at(i + 1) * w[2] + at(i + 2) * w[3]
    };
    let mut u = vec![C64::new(0.0, 0.0); n];
    if k <= 0 {
        let decay = (kf * dxi).exp();
        for i in 0..n - 1 {
            u[i + 1] = u[i] * decay + cell(i) * 2.0;
        }
    } else {
        let decay = (-kf * dxi).exp();
        for i in (0..n - 1).rev() {
            u[i] = u[i + 1] * decay - cell(i) * 2.0;
        }
    }
    u
}

/// (P f, T f) on a strip grid; either output may be skipped.
pub(crate) fn strip_pair(
    field: &SampledField,
    backend: Backend,
    want_p: bool,
    want_t: bool,
) -> (Option<Vec<C64>>, Option<Vec<C64>>) {
    let g = &field.grid;
    let p = plan(g.n(), g.rows(), g.row_spacing());
    let modes = to_modes(field, &p);
    let n = p.n_phi;
    let u: Vec<Vec<C64>> = modes
        .iter()
        .enumerate()
        .map(|(q, fk)| {
            let k = mode_number(q, n);
            match backend {
                Backend::Fft => spectral_mode(fk, k, &p),
                Backend::Direct => recursive_mode(fk, k, p.dxi),
            }
        })
        .collect();
    let t_out = want_t.then(|| {
        let t_modes: Vec<Vec<C64>> = modes
            .iter()
            .zip(&u)
            .enumerate()
            .map(|(q, (fk, uk))| {
                let k = mode_number(q, n) as f64;
                fk.iter().zip(uk).map(|(f, u)| f + u * k).collect()
            })
            .collect();
        from_modes(&t_modes, &p)
    });
    let p_out = want_p.then(|| from_modes(&u, &p));
    (p_out, t_out)
}
