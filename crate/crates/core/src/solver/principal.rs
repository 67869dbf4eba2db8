use super::{neumann, BeltramiCoefficient, Diagnostics, MappingKind, QcMapping, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{sample, SampledField};
use crate::transforms::{beurling_with, cauchy_with};

fn same_grid(mu: &BeltramiCoefficient, phi: &SampledField) -> Result<()> {
    if mu.grid() != &phi.grid {
        return Err(Error::InvalidArgument("mu and the right-hand side live on different grids".into()));
    }
    if !phi.grid.is_square() {
        return Err(Error::InvalidArgument("plane solutions need a square lattice".into()));
    }
    Ok(())
}

/// h = (Id - mu S)^{-1} phi by the Neumann series.
pub(crate) fn resolvent(
    mu: &SampledField,
    phi: &SampledField,
    cfg: &SolverConfig,
) -> Result<(SampledField, super::NeumannStats)> {
    neumann(phi, None, cfg, |h| Ok(mu.mul(&beurling_with(h, cfg.backend)?)))
}

/// sigma = C (Id - mu S)^{-1} phi, the solution of sigma_zbar = mu sigma_z + phi
/// that vanishes at infinity.
pub fn solve_inhomogeneous(mu: &BeltramiCoefficient, phi: &SampledField) -> Result<SampledField> {
    Ok(solve_inhomogeneous_with(mu, phi, &SolverConfig::default())?.0)
}

pub fn solve_inhomogeneous_with(
    mu: &BeltramiCoefficient,
    phi: &SampledField,
    cfg: &SolverConfig,
) -> Result<(SampledField, Diagnostics)> {
    same_grid(mu, phi)?;
    let (h, stats) = resolvent(mu.field(), phi, cfg)?;
    let sigma = cauchy_with(&h, cfg.backend)?;
    let sz = beurling_with(&h, cfg.backend)?;
    let mut num = 0.0;
    for k in 0..h.len() {
        num += (h.values[k] - mu.field().values[k] * sz.values[k] - phi.values[k]).norm_sqr();
    }
    let residual = num.sqrt() / phi.l2().max(f64::MIN_POSITIVE);
    Ok((sigma, Diagnostics { iterations: stats.iterations, residual, contraction_ratio: stats.ratio }))
}

fn identity_jet(mu: &BeltramiCoefficient) -> Result<SampledField> {
    sample(|z| z, mu.grid())
}

/// f(z) = z + C h with h = (Id - mu S)^{-1} mu, so f_zbar = h and f_z = 1 + S h.
pub fn principal_solution(mu: &BeltramiCoefficient, cfg: &SolverConfig) -> Result<QcMapping> {
    same_grid(mu, mu.field())?;
    let (h, stats) = resolvent(mu.field(), mu.field(), cfg)?;
    let ch = cauchy_with(&h, cfg.backend)?;
    let sh = beurling_with(&h, cfg.backend)?;
    let f = identity_jet(mu)?.add(&ch).with_label("principal solution");
    let fz = sh.map(|_, v| v + 1.0);
    let mapping = QcMapping {
        f,
        fz,
        fzbar: h,
        kind: MappingKind::Principal,
        diagnostics: Diagnostics { iterations: stats.iterations, residual: 0.0, contraction_ratio: stats.ratio },
    };
    let mask = vec![true; mapping.f.len()];
    let residual = mapping.beltrami_residual(mu.field(), &mask);
    Ok(QcMapping { diagnostics: Diagnostics { residual, ..mapping.diagnostics }, ..mapping })
}

/// The exponential form F = z + C(mu e^sigma), where sigma = log F_z solves
/// sigma_zbar = mu sigma_z + mu_z. F_z = e^sigma never vanishes.
pub fn principal_solution_exponential(mu: &BeltramiCoefficient, cfg: &SolverConfig) -> Result<QcMapping> {
    same_grid(mu, mu.field())?;
    let mu_z = mu.derivative(1, 0)?;
    let (sigma, diag) = solve_inhomogeneous_with(mu, &mu_z, cfg)?;
    let e = sigma.map(|_, s| s.exp());
    let g = mu.field().mul(&e);
    let f = identity_jet(mu)?.add(&cauchy_with(&g, cfg.backend)?).with_label("principal solution");
    let mapping = QcMapping {
        f,
        fz: e,
        fzbar: g,
        kind: MappingKind::Principal,
        diagnostics: Diagnostics { residual: 0.0, ..diag },
    };
    // the residual compares e^sigma with the transform-side derivative 1 + S(mu e^sigma)
    let sz = beurling_with(&mapping.fzbar, cfg.backend)?;
    let mut num = 0.0;
    for (a, b) in sz.values.iter().zip(&mapping.fz.values) {
        num += (a + 1.0 - b).norm_sqr();
    }
    let residual = num.sqrt() / mapping.fz.l2();
    Ok(QcMapping { diagnostics: Diagnostics { residual, ..mapping.diagnostics }, ..mapping })
}
