use super::{neumann, BeltramiCoefficient, Diagnostics, MappingKind, QcMapping, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::transforms::{strip_with, Kernel};

#[derive(Clone, Debug)]
pub struct LogSolution {
    pub mapping: QcMapping,
    /// sup |f(zeta) - zeta| over the grid.
    pub deviation: f64,
    /// sup |e^{-xi} nu|.
    pub c: f64,
}

/// f = zeta + P_H[nu h] with h = 1 + T_H(nu h); the iteration runs on g = nu h.
pub fn principal_log_solution(nu: &BeltramiCoefficient, cfg: &SolverConfig) -> Result<LogSolution> {
    let g = nu.grid();
    if !g.is_strip() {
        return Err(Error::InvalidArgument("the logarithmic solution needs a strip grid".into()));
    }
    let field = nu.field();
    let n = g.n();
    let rows = g.rows();
    let top = (rows.saturating_sub(2)..rows).flat_map(|r| (0..n).map(move |i| r * n + i));
    let edge = top.map(|k| field.values[k].norm()).fold(0.0, f64::max);
    if edge > 1e-12 * field.sup().max(f64::MIN_POSITIVE) && edge > 0.0 {
        return Err(Error::SupportOutsideDomain(format!(
            "nu reaches the upper end of the strip (|nu| = {edge:e}); its support must end below xi_max"
        )));
    }
    let c = g.nodes().iter().zip(&field.values).map(|(z, v)| v.norm() * (-z.re).exp()).fold(0.0, f64::max);

    let (gsol, stats) = neumann(field, None, cfg, |x| Ok(field.mul(&strip_with(x, Kernel::Beurling, cfg.backend)?)))?;
    let p = strip_with(&gsol, Kernel::Cauchy, cfg.backend)?;
    let t = strip_with(&gsol, Kernel::Beurling, cfg.backend)?;
    let zeta = SampledField::new(g.clone(), g.nodes().to_vec(), "zeta")?;
    let f = zeta.add(&p).with_label("logarithmic solution");
    let fz = t.map(|_, v| v + 1.0);
    let deviation = p.sup();
    let mapping = QcMapping {
        f,
        fz,
        fzbar: gsol,
        kind: MappingKind::LogPrincipal,
        diagnostics: Diagnostics { iterations: stats.iterations, residual: 0.0, contraction_ratio: stats.ratio },
    };
    let mask = vec![true; g.len()];
    let residual = mapping.beltrami_residual(field, &mask);
    let mapping = QcMapping { diagnostics: Diagnostics { residual, ..mapping.diagnostics }, ..mapping };
    Ok(LogSolution { mapping, deviation, c })
}
