//! Cauchy and Beurling transforms on a square lattice.
//!
//! The spectral backend convolves with the kernel truncated at radius
//! R = sqrt(2) * (box side), whose Fourier transform is known in closed form:
//! (2 / (i k)) (1 - J0(|k| R)) for the Cauchy kernel and
//! (conj(k) / k) (1 - 2 J1(|k| R) / (|k| R)) for the Beurling kernel. Since no
//! two nodes are farther apart than R, the padded convolution reproduces the
//! aperiodic integral of the sampled field with spectral accuracy.
//!
//! The lattice backend is the point rule with a zero diagonal plus the
//! leading lattice-sum corrections, evaluated as an exact discrete
//! convolution.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;

use super::fft2::{smooth_size, Fft2};
use crate::diff::wirtinger;
use crate::grid::SampledField;

/// Regularized lattice sum of (conj(j)/j)^2 over the nonzero Gaussian
/// integers, the constant in the second-order Beurling correction.
pub const LATTICE_GAMMA: f64 = 1.596_422_65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    Cauchy,
    Beurling,
}

pub(crate) struct SpectralPlan {
    pub fft: Fft2,
    pub cauchy: Vec<C64>,
    pub beurling: Vec<C64>,
    pub wavenumbers: Vec<f64>,
}

struct LatticePlan {
    fft: Fft2,
    cauchy: Vec<C64>,
    beurling: Vec<C64>,
}

type Key = (usize, u64);

fn spectral_cache() -> &'static Mutex<HashMap<Key, Arc<SpectralPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<SpectralPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn lattice_cache() -> &'static Mutex<HashMap<Key, Arc<LatticePlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<LatticePlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn spectral_plan(n: usize, h: f64) -> Arc<SpectralPlan> {
    let key = (n, h.to_bits());
    if let Some(p) = spectral_cache().lock().expect("plan cache").get(&key) {
        return p.clone();
    }
    let big = smooth_size((n as f64 * (1.0 + SQRT_2)).ceil() as usize + 2);
    let fft = Fft2::new(n, big);
    let k = fft.wavenumbers(h);
    let radius = SQRT_2 * n as f64 * h;
    let mut cauchy = vec![C64::new(0.0, 0.0); big * big];
    let mut beurling = vec![C64::new(0.0, 0.0); big * big];
    for (a, &kx) in k.iter().enumerate() {
        for (b, &ky) in k.iter().enumerate() {
            if a == 0 && b == 0 {
                continue;
            }
            let kk = C64::new(kx, ky);
            let x = kk.norm() * radius;
            cauchy[a * big + b] = C64::new(0.0, -2.0) / kk * (1.0 - libm::j0(x));
            beurling[a * big + b] = kk.conj() / kk * (1.0 - 2.0 * libm::j1(x) / x);
        }
    }
    let plan = Arc::new(SpectralPlan { fft, cauchy, beurling, wavenumbers: k });
    let mut cache = spectral_cache().lock().expect("plan cache");
    if cache.len() > 8 {
        cache.clear();
    }
    cache.insert(key, plan.clone());
    plan
}

fn lattice_plan(n: usize, h: f64) -> Arc<LatticePlan> {
    let key = (n, h.to_bits());
    if let Some(p) = lattice_cache().lock().expect("plan cache").get(&key) {
        return p.clone();
    }
    let big = smooth_size(2 * n);
    let fft = Fft2::new(n, big);
    let w = h * h / PI;
    let mut kc = vec![C64::new(0.0, 0.0); big * big];
    let mut ks = vec![C64::new(0.0, 0.0); big * big];
    let n = n as isize;
    for b in -(n - 1)..n {
        for a in -(n - 1)..n {
            if a == 0 && b == 0 {
                continue;
            }
            let d = C64::new(a as f64 * h, b as f64 * h);
            let idx = b.rem_euclid(big as isize) as usize * big + a.rem_euclid(big as isize) as usize;
            kc[idx] = w / d;
            ks[idx] = -w / (d * d);
        }
    }
    let plan = Arc::new(LatticePlan { cauchy: fft.forward_full(kc), beurling: fft.forward_full(ks), fft });
    let mut cache = lattice_cache().lock().expect("plan cache");
    if cache.len() > 8 {
        cache.clear();
    }
    cache.insert(key, plan.clone());
    plan
}

/// Spectral transform of a square-lattice field.
pub(crate) fn spectral(field: &SampledField, kernel: Kernel) -> Vec<C64> {
    let g = &field.grid;
    let plan = spectral_plan(g.n(), g.spacing());
    let mult = match kernel {
        Kernel::Cauchy => &plan.cauchy,
        Kernel::Beurling => &plan.beurling,
    };
    plan.fft.apply(&field.values, mult)
}

/// d/dz of the Cauchy transform taken on the padded lattice (before cropping).
pub(crate) fn spectral_cauchy_dz(field: &SampledField) -> Vec<C64> {
    let g = &field.grid;
    let plan = spectral_plan(g.n(), g.spacing());
    let big = plan.fft.big();
    let mut spec = plan.fft.forward(&field.values);
    for (a, &kx) in plan.wavenumbers.iter().enumerate() {
        for (b, &ky) in plan.wavenumbers.iter().enumerate() {
            // d/dz has symbol i (kx - i ky) / 2
            let dz = C64::new(ky, kx) * 0.5;
            spec[a * big + b] *= plan.cauchy[a * big + b] * dz;
        }
    }
    plan.fft.inverse(spec)
}

fn lattice_corrections(field: &SampledField, kernel: Kernel) -> Vec<C64> {
    let h = field.grid.spacing();
    let w = h * h / PI;
    let (fz, fzb) = wirtinger(field, None);
    match kernel {
        Kernel::Cauchy => fz.values.iter().map(|&d| -w * d).collect(),
        Kernel::Beurling => {
            let (fzz, _) = wirtinger(&fz, None);
            let (_, fzbzb) = wirtinger(&fzb, None);
            fzz.values.iter().zip(&fzbzb.values).map(|(&a, &b)| w * (-0.5 * a + 0.5 * LATTICE_GAMMA * b)).collect()
        }
    }
}

/// Corrected lattice rule evaluated as a discrete convolution.
pub(crate) fn lattice(field: &SampledField, kernel: Kernel) -> Vec<C64> {
    let g = &field.grid;
    let plan = lattice_plan(g.n(), g.spacing());
    let mult = match kernel {
        Kernel::Cauchy => &plan.cauchy,
        Kernel::Beurling => &plan.beurling,
    };
    let mut out = plan.fft.apply(&field.values, mult);
    for (o, c) in out.iter_mut().zip(lattice_corrections(field, kernel)) {
        *o += c;
    }
    out
}

/// The corrected lattice rule summed explicitly at selected nodes.
pub fn lattice_probe(field: &SampledField, kernel: Kernel, targets: &[usize]) -> Vec<C64> {
    let g = &field.grid;
    let h = g.spacing();
    let w = h * h / PI;
    let corr = lattice_corrections(field, kernel);
    targets
        .iter()
        .map(|&t| {
            let zt = g.node(t);
            let mut acc = C64::new(0.0, 0.0);
            for (j, (&z, &v)) in g.nodes().iter().zip(&field.values).enumerate() {
                if j == t {
                    continue;
                }
                let d = zt - z;
                acc += match kernel {
                    Kernel::Cauchy => v / d,
                    Kernel::Beurling => -v / (d * d),
                };
            }
            acc * w + corr[t]
        })
        .collect()
}
