//! Solutions of the Beltrami equation f_zbar = mu f_z: principal and normal
//! solutions, the strip solution, and the derivative chain with its
//! reconstructed homeomorphism.

mod chain;
mod log;
mod normal;
mod principal;
mod univalence;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{interp_bicubic, interp_bilinear, ComplexGrid, Jet, ParamMap, SampledField};
use crate::transforms::Backend;

pub use chain::{chain_margin, derivative_chain_solve, reconstruct_map, ChainConfig, DerivativeChain};
pub use log::{principal_log_solution, LogSolution};
pub use normal::{normal_solution, normal_solution_with};
pub use principal::{
    principal_solution, principal_solution_exponential, solve_inhomogeneous, solve_inhomogeneous_with,
};
pub use univalence::{injectivity_sample, univalence_margin, univalence_margin_from, InjectivityReport};

pub type Rule = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Wirtinger derivative d^a/dz^a d^b/dzbar^b of a closed-form rule by nested
/// fourth-order central differences.
pub fn rule_derivative(rule: &(dyn Fn(C64) -> C64 + Send + Sync), z: C64, a: usize, b: usize, step: f64) -> C64 {
    if a == 0 && b == 0 {
        return rule(z);
    }
    let (na, nb, sign) = if a > 0 { (a - 1, b, -1.0) } else { (a, b - 1, 1.0) };
    let d = |dz: C64| rule_derivative(rule, z + dz, na, nb, step);
    let axis = |e: C64| {
        let s = e * step;
        (d(-s * 2.0) - d(s * 2.0) + (d(s) - d(-s)) * 8.0) / (12.0 * step)
    };
    let dx = axis(C64::new(1.0, 0.0));
    let dy = axis(C64::new(0.0, 1.0));
    (dx + C64::new(0.0, sign) * dy) * 0.5
}

/// A Beltrami coefficient with its certified sup bound and optional
/// derivative-growth certificates.
#[derive(Clone)]
pub struct BeltramiCoefficient {
    field: SampledField,
    rule: Option<Rule>,
    d: f64,
    growth: Vec<(usize, f64)>,
    param_growth: Option<(usize, f64)>,
}

impl fmt::Debug for BeltramiCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BeltramiCoefficient")
            .field("grid", &self.field.grid)
            .field("closed_form", &self.rule.is_some())
            .field("d", &self.d)
            .field("growth", &self.growth)
            .finish()
    }
}

impl BeltramiCoefficient {
    pub fn from_field(field: SampledField, d: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidArgument(format!("sup bound d = {d} must lie in [0, 1)")));
        }
        let sup = field.sup();
        if sup > d * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("max |mu| = {sup} exceeds the certified bound {d}")));
        }
        Ok(BeltramiCoefficient { field, rule: None, d, growth: Vec::new(), param_growth: None })
    }

    /// Samples `rule` on `grid`; the rule stays available for derivatives
    /// and off-node evaluation.
    pub fn from_rule(
        rule: impl Fn(C64) -> C64 + Send + Sync + 'static,
        grid: &Arc<ComplexGrid>,
        d: f64,
    ) -> Result<Self> {
        let rule: Rule = Arc::new(rule);
        let values = grid.nodes().iter().map(|&z| rule(z)).collect();
        let field = SampledField::new(grid.clone(), values, "mu")?;
        let mut mu = BeltramiCoefficient::from_field(field, d)?;
        mu.rule = Some(rule);
        Ok(mu)
    }

    /// Attaches certificates |mu_(k)| <= b_k (1 - |z|)^(-k) after checking
    /// them at 100 random interior nodes.
    pub fn with_growth(mut self, certificates: Vec<(usize, f64)>, seed: u64) -> Result<Self> {
        let g = self.field.grid.clone();
        let h = g.spacing();
        let interior: Vec<usize> = (0..g.len()).filter(|&k| g.node(k).norm() < 1.0 - 4.0 * h).collect();
        if interior.is_empty() {
            return Err(Error::InvalidGrid("no interior disk nodes for certificate checks".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks: Vec<usize> = (0..100).map(|_| interior[rng.gen_range(0..interior.len())]).collect();
        for &(k, b) in &certificates {
            let parts: Vec<SampledField> = if self.rule.is_none() {
                (0..=k).map(|a| self.derivative(a, k - a)).collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            for &p in &picks {
                let z = g.node(p);
                let bound = b * (1.0 - z.norm()).powi(-(k as i32));
                for a in 0..=k {
                    let v = match &self.rule {
                        Some(r) => rule_derivative(r.as_ref(), z, a, k - a, 1e-3 * (1.0 - z.norm()).min(1.0)),
                        None => parts[a].values[p],
                    };
                    // difference quotients carry a few percent of error
                    if v.norm() > bound * 1.05 + 1e-9 {
                        return Err(Error::InvalidArgument(format!(
                            "growth certificate b_{k} = {b} fails at z = {z}: |derivative| = {:e} > {:e}",
                            v.norm(),
                            bound
                        )));
                    }
                }
            }
        }
        self.growth = certificates;
        Ok(self)
    }

    pub fn with_param_growth(mut self, n: usize, c: f64) -> Self {
        self.param_growth = Some((n, c));
        self
    }

    pub fn field(&self) -> &SampledField {
        &self.field
    }

    pub fn grid(&self) -> &Arc<ComplexGrid> {
        &self.field.grid
    }

    pub fn rule(&self) -> Option<&Rule> {
        self.rule.as_ref()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn growth(&self) -> &[(usize, f64)] {
        &self.growth
    }

    pub fn param_growth(&self) -> Option<(usize, f64)> {
        self.param_growth
    }

    /// mu at an arbitrary point: the rule when present, else bilinear
    /// interpolation of the samples.
    pub fn at(&self, z: C64) -> C64 {
        match &self.rule {
            Some(r) => r(z),
            None => interp_bilinear(&self.field, z),
        }
    }

    /// d^a/dz^a d^b/dzbar^b mu on the grid nodes.
    pub fn derivative(&self, a: usize, b: usize) -> Result<SampledField> {
        let g = &self.field.grid;
        if let Some(r) = &self.rule {
            let step = 0.25 * g.spacing();
            let values = g.nodes().iter().map(|&z| rule_derivative(r.as_ref(), z, a, b, step)).collect();
            return SampledField::new(g.clone(), values, "mu derivative");
        }
        let mut f = self.field.clone();
        for _ in 0..a {
            f = crate::diff::wirtinger(&f, None).0;
        }
        for _ in 0..b {
            f = crate::diff::wirtinger(&f, None).1;
        }
        Ok(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingKind {
    Principal,
    Normal,
    LogPrincipal,
    Reconstructed,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// ||f_zbar - mu f_z||_2 / ||f_z||_2 over the interior nodes.
    pub residual: f64,
    pub contraction_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct QcMapping {
    pub f: SampledField,
    pub fz: SampledField,
    pub fzbar: SampledField,
    pub kind: MappingKind,
    pub diagnostics: Diagnostics,
}

impl QcMapping {
    /// ||f_zbar - mu f_z||_2 / ||f_z||_2 over nodes where `mask` holds.
    pub fn beltrami_residual(&self, mu: &SampledField, mask: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..self.f.len() {
            if mask[k] {
                num += (self.fzbar.values[k] - mu.values[k] * self.fz.values[k]).norm_sqr();
                den += self.fz.values[k].norm_sqr();
            }
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

/// A solved mapping used as a parameterization, with values and derivatives
/// interpolated bicubically between nodes.
#[derive(Clone, Debug)]
pub struct SampledMap {
    f: SampledField,
    fz: SampledField,
    fzbar: SampledField,
}

impl SampledMap {
    pub fn new(mapping: &QcMapping) -> Self {
        SampledMap { f: mapping.f.clone(), fz: mapping.fz.clone(), fzbar: mapping.fzbar.clone() }
    }
}

impl ParamMap for SampledMap {
    fn jet(&self, z: C64) -> Jet {
        Jet { f: interp_bicubic(&self.f, z), fz: interp_bicubic(&self.fz, z), fzbar: interp_bicubic(&self.fzbar, z) }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, max_iter: 400, backend: Backend::Fft }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NeumannStats {
    pub iterations: usize,
    pub ratio: f64,
}

/// Iterates h <- phi + step(h) from `start` (or phi) until the increment's L2
/// norm drops below tol * ||phi|| * (1 - ratio).
pub(crate) fn neumann(
    phi: &SampledField,
    start: Option<SampledField>,
    cfg: &SolverConfig,
    mut step: impl FnMut(&SampledField) -> Result<SampledField>,
) -> Result<(SampledField, NeumannStats)> {
    let scale = phi.l2();
    if scale == 0.0 && start.is_none() {
        return Ok((phi.clone(), NeumannStats::default()));
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let mut h = start.unwrap_or_else(|| phi.clone());
    let mut first = None;
    let mut last = 0.0;
    let mut ratio = 0.0;
    let mut growing = 0;
    for it in 1..=cfg.max_iter {
        let next = phi.add(&step(&h)?);
        let inc = next.sub(&h).l2();
        h = next;
        if inc == 0.0 {
            return Ok((h, NeumannStats { iterations: it, ratio }));
        }
        match first {
            None => first = Some(inc),
            Some(f0) => {
                ratio = (inc / f0).powf(1.0 / (it - 1) as f64);
                growing = if inc > last { growing + 1 } else { 0 };
            }
        }
        if !inc.is_finite() || growing >= 5 || inc > 1e8 * scale {
            return Err(Error::NonConvergence { iterations: it, ratio });
        }
        if inc <= cfg.tol * scale * (1.0 - ratio.min(0.99)) {
            return Ok((h, NeumannStats { iterations: it, ratio }));
        }
        last = inc;
    }
    Err(Error::NonConvergence { iterations: cfg.max_iter, ratio })
}
