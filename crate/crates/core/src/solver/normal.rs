//! Normal solution on the unit disk.
//!
//! With f0 the principal solution of mu shifted so that f0(0) = 0, the map
//! ft(z) = 1 / conj(f0(1/conj z)) is conformal on D. The coefficient
//! lambda = (mu ft_z / conj(ft_z)) o ft^{-1} is supported in ft(D), and
//! f_c = f0_lambda o ft is mu-quasiconformal on D and symmetric in the circle,
//! so f = f_c / f_c(1) maps D onto D fixing 0 and 1.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::principal::principal_solution;
use super::{BeltramiCoefficient, Diagnostics, MappingKind, QcMapping, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{interp_bicubic, square, ComplexGrid, Extent, SampledField};

/// Evaluates a shifted principal solution F - F(0) and its derivatives at
/// arbitrary points: bicubic interpolation on the lattice, the Laurent
/// expansion of the Cauchy transform outside it.
struct PlaneEval {
    f: SampledField,
    fz: SampledField,
    fzbar: SampledField,
    moments: Vec<C64>,
    shift: C64,
    reach: f64,
    radius: f64,
}

impl PlaneEval {
    fn new(map: &QcMapping) -> Self {
        let g = &map.f.grid;
        let h = g.spacing();
        let reach = g.half_width().expect("square lattice") - 3.0 * h;
        let radius = g
            .nodes()
            .iter()
            .zip(&map.fzbar.values)
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(z, _)| z.norm())
            .fold(0.0, f64::max);
        // enough terms for (radius / reach)^K below 1e-15
        let terms =
            if radius == 0.0 { 0 } else { ((1e-15_f64).ln() / (radius / reach).min(0.999).ln()).ceil() as usize + 1 };
        let w = h * h / PI;
        let mut moments = vec![C64::new(0.0, 0.0); terms];
        for (&tau, &v) in g.nodes().iter().zip(&map.fzbar.values) {
            if v.norm() == 0.0 {
                continue;
            }
            let mut p = v * w;
            for m in moments.iter_mut() {
                *m += p;
                p *= tau;
            }
        }
        let shift = interp_bicubic(&map.f, C64::new(0.0, 0.0));
        PlaneEval { f: map.f.clone(), fz: map.fz.clone(), fzbar: map.fzbar.clone(), moments, shift, reach, radius }
    }

    /// (F(u) - F(0), F_u, F_ubar).
    fn eval(&self, u: C64) -> (C64, C64, C64) {
        if u.re.abs().max(u.im.abs()) <= self.reach {
            return (
                interp_bicubic(&self.f, u) - self.shift,
                interp_bicubic(&self.fz, u),
                interp_bicubic(&self.fzbar, u),
            );
        }
        debug_assert!(u.norm() > self.radius);
        let inv = 1.0 / u;
        let mut p = inv;
        let mut val = u - self.shift;
        let mut der = C64::new(1.0, 0.0);
        for (j, &m) in self.moments.iter().enumerate() {
            val += m * p;
            der -= m * p * inv * (j + 1) as f64;
            p *= inv;
        }
        (val, der, C64::new(0.0, 0.0))
    }
}

/// ft(z) = 1 / conj(F0(1/conj z)) with its Wirtinger derivatives.
fn reflected(eval: &PlaneEval, z: C64) -> (C64, C64, C64) {
    let u = 1.0 / z.conj();
    let (f, fu, fub) = eval.eval(u);
    let gam = f.conj();
    let gz = -fu.conj() / (z * z);
    let gzb = -fub.conj() / (z.conj() * z.conj());
    let g2 = gam * gam;
    (1.0 / gam, -gz / g2, -gzb / g2)
}

fn invert(eval: &PlaneEval, w: C64, start: C64) -> Option<C64> {
    let mut z = start;
    for _ in 0..40 {
        if z.norm() > 1.5 || z.norm() < 1e-300 {
            return None;
        }
        let (f, fz, fzb) = reflected(eval, z);
        let r = f - w;
        if r.norm() < 1e-13 * (1.0 + w.norm()) {
            return Some(z);
        }
        let det = fz.norm_sqr() - fzb.norm_sqr();
        if det.abs() < 1e-300 {
            return None;
        }
        z -= (fz.conj() * r - fzb * r.conj()) / det;
    }
    None
}

fn check_disk_lattice(mu: &BeltramiCoefficient) -> Result<()> {
    let g = mu.grid();
    match g.extent() {
        Extent::Box { center, half_width }
            if g.is_square() && center[0] == 0.0 && center[1] == 0.0 && (*half_width - 1.0).abs() < 1e-12 => {}
        _ => return Err(Error::InvalidArgument("normal solutions take mu on a lattice over [-1, 1]^2".into())),
    }
    let sup = mu.field().sup();
    for (z, v) in g.nodes().iter().zip(&mu.field().values) {
        if z.norm() >= 1.0 && v.norm() > 1e-12 * sup {
            return Err(Error::SupportOutsideDomain(format!("mu({z}) = {v} outside the unit disk")));
        }
    }
    Ok(())
}

/// Embeds the disk lattice into the lattice over [-2, 2]^2 with the same spacing.
fn embed(field: &SampledField, plane: &Arc<ComplexGrid>) -> Result<SampledField> {
    let n = field.grid.n();
    let mut values = vec![C64::new(0.0, 0.0); plane.len()];
    let off = n / 2;
    for j in 0..n {
        for i in 0..n {
            values[plane.index(i + off, j + off)] = field.values[field.grid.index(i, j)];
        }
    }
    SampledField::new(plane.clone(), values, field.label.clone())
}

pub fn normal_solution(mu: &BeltramiCoefficient) -> Result<QcMapping> {
    normal_solution_with(mu, &SolverConfig::default())
}

pub fn normal_solution_with(mu: &BeltramiCoefficient, cfg: &SolverConfig) -> Result<QcMapping> {
    check_disk_lattice(mu)?;
    let g = mu.grid().clone();
    let n = g.n();
    let h = g.spacing();
    let plane = square(2 * n, 2.0)?;

    let mu_plane = BeltramiCoefficient::from_field(embed(mu.field(), &plane)?, mu.d())?;
    let first = principal_solution(&mu_plane, cfg)?;
    let outer = PlaneEval::new(&first);

    // lambda on the plane lattice, by Newton inversion of the reflected map
    let mut lambda = vec![C64::new(0.0, 0.0); plane.len()];
    let mut guess = C64::new(0.0, 0.0);
    for (k, &w) in plane.nodes().iter().enumerate() {
        if w.norm() > 1.9 {
            continue;
        }
        let z = invert(&outer, w, if (guess - w).norm() < 0.2 { guess } else { w }).or_else(|| invert(&outer, w, w));
        let Some(z) = z else { continue };
        guess = z;
        if z.norm() >= 1.0 {
            continue;
        }
        let (_, fz, _) = reflected(&outer, z);
        lambda[k] = mu.at(z) * fz / fz.conj();
    }
    let lambda = SampledField::new(plane.clone(), lambda, "lambda")?;
    // conformal factors have unit modulus, so the sup bound carries over
    let d_lambda = mu.d().max(lambda.sup());
    let lambda = BeltramiCoefficient::from_field(lambda, d_lambda.min(1.0 - 1e-15))?;
    let second = principal_solution(&lambda, cfg)?;
    let inner = PlaneEval::new(&second);

    let compose = |z: C64| {
        let (p, pz, pzb) = reflected(&outer, z);
        let (gv, gw, gwb) = inner.eval(p);
        (gv, gw * pz + gwb * pzb.conj(), gw * pzb + gwb * pz.conj())
    };
    let (c1, _, _) = compose(C64::new(1.0, 0.0));
    if (c1.norm() - 1.0).abs() > 0.1 {
        return Err(Error::Normalization(c1.norm()));
    }
    let mut f = Vec::with_capacity(g.len());
    let mut fz = Vec::with_capacity(g.len());
    let mut fzb = Vec::with_capacity(g.len());
    for &z in g.nodes() {
        let (v, a, b) = compose(z);
        f.push(v / c1);
        fz.push(a / c1);
        fzb.push(b / c1);
    }
    let mapping = QcMapping {
        f: SampledField::new(g.clone(), f, "normal solution")?,
        fz: SampledField::new(g.clone(), fz, "f_z")?,
        fzbar: SampledField::new(g.clone(), fzb, "f_zbar")?,
        kind: MappingKind::Normal,
        diagnostics: Diagnostics {
            iterations: first.diagnostics.iterations + second.diagnostics.iterations,
            residual: 0.0,
            contraction_ratio: first.diagnostics.contraction_ratio.max(second.diagnostics.contraction_ratio),
        },
    };
    let mask: Vec<bool> = g.nodes().iter().map(|z| z.norm() <= 1.0 - 4.0 * h).collect();
    let residual = mapping.beltrami_residual(mu.field(), &mask);
    Ok(QcMapping { diagnostics: Diagnostics { residual, ..mapping.diagnostics }, ..mapping })
}
