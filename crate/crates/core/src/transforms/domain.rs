//! Counter-term operators on a quasidisk, evaluated by pullback to the
//! parameter disk.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::counter::{counter_sum, reflected_sources};
use super::plane::Kernel;
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum_c, ParamMap, Quasidisk, SampledField};
use crate::moebius::reflect_preimage;

/// Nodes of the parameter lattice inside the disk together with their images,
/// Jacobians and reflected points.
pub(crate) struct Pullback {
    pub index: Vec<usize>,
    pub w: Vec<C64>,
    pub jac: Vec<f64>,
    pub w_hat: Vec<C64>,
}

impl Pullback {
    pub fn new(field: &SampledField, map: &dyn ParamMap) -> Result<Self> {
        let g = &field.grid;
        let mut pb = Pullback { index: Vec::new(), w: Vec::new(), jac: Vec::new(), w_hat: Vec::new() };
        for (k, &z) in g.nodes().iter().enumerate() {
            if z.norm() >= 1.0 {
                continue;
            }
            let jet = map.jet(z);
            pb.index.push(k);
            pb.w.push(jet.f);
            pb.jac.push(jet.jacobian());
            pb.w_hat.push(reflect_preimage(map, z)?);
        }
        Ok(pb)
    }
}

/// The Beurling transform of the indicator of the domain at an interior
/// point, from the boundary integral -(1/(2 pi i)) \oint conj(s) / (s - w)^2 ds.
pub fn beurling_indicator(q: &Quasidisk, w: C64) -> C64 {
    let map = q.map();
    let m = q.boundary().len();
    let dt = 2.0 * PI / m as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..m {
        let e = C64::from_polar(1.0, dt * k as f64);
        let jet = map.jet(e);
        let ds = (jet.fz * e - jet.fzbar * e.conj()) * C64::new(0.0, 1.0);
        let d = jet.f - w;
        acc += jet.f.conj() / (d * d) * ds;
    }
    -acc * dt / (2.0 * PI * C64::new(0.0, 1.0))
}

pub(crate) fn apply(field: &SampledField, q: &Quasidisk, m: usize, kernel: Kernel) -> Result<SampledField> {
    let g = &field.grid;
    if !g.is_square() {
        return Err(Error::InvalidArgument("domain operators act on a lattice over the parameter disk".into()));
    }
    let pb = Pullback::new(field, q.map().as_ref())?;
    let h2 = g.spacing() * g.spacing();
    let f: Vec<C64> = pb.index.iter().map(|&k| field.values[k]).collect();
    let a: Vec<C64> = f.iter().zip(&pb.jac).map(|(&v, &j)| v * j * h2 / PI).collect();
    let nd = pb.w.len();
    let mut out = vec![C64::new(0.0, 0.0); nd];
    let mut terms = vec![C64::new(0.0, 0.0); nd];
    for i in 0..nd {
        let wi = pb.w[i];
        match kernel {
            Kernel::Cauchy => {
                for k in 0..nd {
                    terms[k] = if k == i { C64::new(0.0, 0.0) } else { a[k] / (wi - pb.w[k]) };
                }
                out[i] = pairwise_sum_c(&terms);
            }
            Kernel::Beurling => {
                for k in 0..nd {
                    terms[k] = if k == i {
                        C64::new(0.0, 0.0)
                    } else {
                        let d = wi - pb.w[k];
                        (f[k] - f[i]) * pb.jac[k] * h2 / PI / (d * d)
                    };
                }
                let indicator = if f[i] == C64::new(0.0, 0.0) { C64::new(0.0, 0.0) } else { beurling_indicator(q, wi) };
                out[i] = f[i] * indicator - pairwise_sum_c(&terms);
            }
        }
    }
    if m > 0 {
        let src = reflected_sources(&pb.w, &pb.w_hat, &a, m, kernel == Kernel::Beurling);
        let offset = if kernel == Kernel::Beurling { 2 } else { 1 };
        for (o, c) in out.iter_mut().zip(counter_sum(&src, &pb.w, offset)) {
            *o += c;
        }
    }
    let mut values = vec![C64::new(0.0, 0.0); g.len()];
    for (&k, v) in pb.index.iter().zip(out) {
        values[k] = v;
    }
    SampledField::new(g.clone(), values, field.label.clone())
}
