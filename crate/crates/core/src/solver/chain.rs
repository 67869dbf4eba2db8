//! The chain f_j = d^j/dw^j log F_w and the map F rebuilt from it.
//!
//! Differentiating sigma_wbar = mu sigma_w + mu_w (sigma = log F_w) j times
//! gives, for f_j = d^j sigma / dw^j,
//!   (f_j)_wbar = mu (f_j)_w + sum_{i=1}^{j} binom(j, i) mu^(i) f_{j+1-i} + mu^(j+1),
//! with mu^(i) = d^i mu / dw^i. Each level is solved by
//!   f_j <- P_m (Id - mu T_m)^{-1} [right-hand side evaluated at the previous f_j].

use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::{neumann, BeltramiCoefficient, Diagnostics, MappingKind, QcMapping, SolverConfig};
use crate::diff::wirtinger;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, DomainGeometry, Jet, SampledField};
use crate::moebius::{ReflectionMode, ReflectionRule};
use crate::transforms::{beurling_m, cauchy_m, domain_beurling_m, domain_cauchy_m};

#[derive(Clone, Copy, Debug)]
pub struct ChainConfig {
    pub k: usize,
    pub m: usize,
    /// Largest admissible b in |mu_(j)| <= b dist^(-j).
    pub b_max: f64,
    /// Stopping tolerance of the series, relative to the level's size.
    pub tol: f64,
    /// Acceptance threshold for level residuals and path discrepancy.
    pub residual_tol: f64,
    pub max_outer: usize,
}

impl ChainConfig {
    pub fn new(k: usize, m: usize) -> Self {
        ChainConfig { k, m, b_max: 0.05, tol: 1e-10, residual_tol: 1e-3, max_outer: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct DerivativeChain {
    pub k: usize,
    pub m: usize,
    /// f_1 .. f_k.
    pub levels: Vec<SampledField>,
    /// sigma_wbar = mu f_1 + mu_w, the companion of f_1 in the path integral.
    pub conj_first: SampledField,
    /// Weighted residual of each level's equation, by finite differences.
    pub residuals: Vec<f64>,
    /// Geometric ratio of the outer increments per level.
    pub ratios: Vec<f64>,
    pub iterations: Vec<usize>,
    /// sup |f_j| dist^j per level.
    pub decay_constants: Vec<f64>,
    /// Measured b: max of sup |mu| and sup |mu^(j)| dist^j for j <= k + 1.
    pub measured_b: f64,
    pub geometry: DomainGeometry,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Node geometry on the parameter lattice: membership, distance to the
/// boundary and the parameterizing jet (identity for the disk).
pub(crate) struct Nodes {
    pub inside: Vec<bool>,
    pub dist: Vec<f64>,
    jets: Option<Vec<Jet>>,
}

impl Nodes {
    pub fn new(grid: &Arc<ComplexGrid>, geometry: &DomainGeometry) -> Result<Self> {
        let mut inside = Vec::with_capacity(grid.len());
        let mut dist = Vec::with_capacity(grid.len());
        let mut jets = match geometry {
            DomainGeometry::Quasidisk(_) => Some(Vec::with_capacity(grid.len())),
            DomainGeometry::UnitDisk => None,
            _ => return Err(Error::InvalidArgument("the derivative chain lives on the disk or a quasidisk".into())),
        };
        for &z in grid.nodes() {
            match geometry.node_data(z) {
                Some((_, _, d)) => {
                    inside.push(true);
                    dist.push(d);
                }
                None => {
                    inside.push(false);
                    dist.push(0.0);
                }
            }
            if let (Some(j), DomainGeometry::Quasidisk(q)) = (jets.as_mut(), geometry) {
                j.push(q.map().jet(z));
            }
        }
        Ok(Nodes { inside, dist, jets })
    }

    /// (F_w, F_wbar) of a field on the parameter lattice.
    pub fn w_derivatives(&self, field: &SampledField) -> (SampledField, SampledField) {
        let (fz, fzb) = wirtinger(field, Some(&self.inside));
        let Some(jets) = &self.jets else { return (fz, fzb) };
        let mut fw = fz.clone();
        let mut fwb = fzb.clone();
        for (k, jet) in jets.iter().enumerate() {
            let det = jet.jacobian();
            let (a, b) = (fz.values[k], fzb.values[k]);
            fw.values[k] = (a * jet.fz.conj() - b * jet.fzbar.conj()) / det;
            fwb.values[k] = (b * jet.fz - a * jet.fzbar) / det;
        }
        (fw, fwb)
    }

    /// (F_z, F_zbar) from (F_w, F_wbar).
    fn z_derivatives(&self, fw: &SampledField, fwb: &SampledField) -> (SampledField, SampledField) {
        let Some(jets) = &self.jets else { return (fw.clone(), fwb.clone()) };
        let mut fz = fw.clone();
        let mut fzb = fwb.clone();
        for (k, jet) in jets.iter().enumerate() {
            let (a, b) = (fw.values[k], fwb.values[k]);
            fz.values[k] = a * jet.fz + b * jet.fzbar.conj();
            fzb.values[k] = a * jet.fzbar + b * jet.fz.conj();
        }
        (fz, fzb)
    }

    fn mask(&self, field: &SampledField) -> SampledField {
        field.masked(&self.inside)
    }

    fn interior(&self, grid: &ComplexGrid) -> Vec<bool> {
        let h = grid.spacing();
        self.inside.iter().zip(grid.nodes()).map(|(&i, z)| i && z.norm() <= 1.0 - 4.0 * h).collect()
    }
}

struct Operators<'a> {
    geometry: &'a DomainGeometry,
    rule: Option<&'a ReflectionRule>,
    m: usize,
}

impl Operators<'_> {
    fn p(&self, f: &SampledField) -> Result<SampledField> {
        match self.geometry {
            DomainGeometry::UnitDisk => cauchy_m(f, self.m),
            _ => domain_cauchy_m(f, self.geometry, self.rule.expect("checked"), self.m),
        }
    }

    fn t(&self, f: &SampledField) -> Result<SampledField> {
        match self.geometry {
            DomainGeometry::UnitDisk => beurling_m(f, self.m),
            _ => domain_beurling_m(f, self.geometry, self.rule.expect("checked"), self.m),
        }
    }
}

/// mu^(i) = d^i mu / dw^i for i = 1 ..= top, masked to the domain.
fn mu_w_powers(mu: &BeltramiCoefficient, nodes: &Nodes, top: usize) -> Result<Vec<SampledField>> {
    let mut out = Vec::with_capacity(top);
    if nodes.jets.is_none() && mu.rule().is_some() {
        for i in 1..=top {
            out.push(nodes.mask(&mu.derivative(i, 0)?));
        }
        return Ok(out);
    }
    let mut cur = mu.field().clone();
    for _ in 0..top {
        cur = nodes.mask(&nodes.w_derivatives(&cur).0);
        out.push(cur.clone());
    }
    Ok(out)
}

/// max of sup |mu| and sup |mu^(j)| dist^j over the derivatives that enter
/// the chain equations.
fn measure_b(mu: &BeltramiCoefficient, powers: &[SampledField], nodes: &Nodes) -> f64 {
    let interior = nodes.interior(mu.grid());
    let mut b = mu.field().sup();
    for (j, f) in powers.iter().enumerate() {
        for (k, v) in f.values.iter().enumerate() {
            if interior[k] {
                b = b.max(v.norm() * nodes.dist[k].powi(j as i32 + 1));
            }
        }
    }
    b
}

/// sup over interior nodes of |x| dist^s.
fn weighted_sup(x: &SampledField, nodes: &Nodes, interior: &[bool], s: i32) -> f64 {
    x.values
        .iter()
        .enumerate()
        .filter(|(k, _)| interior[*k])
        .map(|(k, v)| v.norm() * nodes.dist[k].powi(s))
        .fold(0.0, f64::max)
}

pub fn derivative_chain_solve(
    mu: &BeltramiCoefficient,
    geometry: &DomainGeometry,
    reflection: Option<&ReflectionRule>,
    cfg: &ChainConfig,
) -> Result<DerivativeChain> {
    let (k, m) = (cfg.k, cfg.m);
    if k == 0 {
        return Err(Error::InvalidArgument("the chain needs k >= 1".into()));
    }
    if m < k + 7 {
        return Err(Error::InvalidArgument(format!("counter-term order m = {m} must be at least k + 7 = {}", k + 7)));
    }
    match (geometry, reflection.map(|r| r.mode())) {
        (DomainGeometry::UnitDisk, None | Some(ReflectionMode::DiskInversion)) => {}
        (DomainGeometry::Quasidisk(_), Some(ReflectionMode::PullbackThroughMap)) => {}
        _ => return Err(Error::InvalidArgument("geometry and reflection rule do not match".into())),
    }
    let grid = mu.grid().clone();
    let nodes = Nodes::new(&grid, geometry)?;
    let powers = mu_w_powers(mu, &nodes, k + 1)?;
    let measured_b = measure_b(mu, &powers, &nodes);
    if measured_b > cfg.b_max {
        return Err(Error::InvalidArgument(format!(
            "measured b = {measured_b:.4} exceeds the admissible {} for the chain iteration",
            cfg.b_max
        )));
    }
    let ops = Operators { geometry, rule: reflection, m };
    let muf = nodes.mask(mu.field());
    let interior = nodes.interior(&grid);
    let series = SolverConfig { tol: cfg.tol, ..SolverConfig::default() };

    let mut levels: Vec<SampledField> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    let mut iterations = Vec::with_capacity(k);
    let mut decay_constants = Vec::with_capacity(k);
    for j in 1..=k {
        // known part: sum_{i=2}^{j} binom(j,i) mu^(i) f_{j+1-i} + mu^(j+1)
        let mut known = powers[j].clone();
        for i in 2..=j {
            known = known.add(&powers[i - 1].mul(&levels[j - i]).scale(C64::new(binom(j, i), 0.0)));
        }
        let coupling = powers[0].scale(C64::new(j as f64, 0.0));
        let mut f = SampledField::zeros(&grid);
        let mut g: Option<SampledField> = None;
        let mut first = None;
        let mut ratio = 0.0;
        let mut prev_inc = f64::INFINITY;
        let mut growing = 0;
        let mut converged = false;
        let mut outer = 0;
        let mut inner_tol: f64 = 1e-6;
        while outer < cfg.max_outer {
            outer += 1;
            let rhs = nodes.mask(&known.add(&coupling.mul(&f)));
            let inner = SolverConfig { tol: inner_tol.max(cfg.tol), ..series };
            let (gn, _) = neumann(&rhs, g.take(), &inner, |x| Ok(muf.mul(&ops.t(x)?)))?;
            let next = ops.p(&gn)?;
            let inc = next.sub(&f).l2();
            let size = next.l2().max(f64::MIN_POSITIVE);
            f = next;
            g = Some(gn);
            match first {
                None => first = Some(inc),
                Some(f0) if f0 > 0.0 => ratio = (inc / f0).powf(1.0 / (outer - 1) as f64),
                _ => {}
            }
            growing = if inc > prev_inc { growing + 1 } else { 0 };
            if growing >= 4 || !inc.is_finite() {
                return Err(Error::NonConvergence { iterations: outer, ratio });
            }
            prev_inc = inc;
            inner_tol = (0.01 * inc / size).max(cfg.tol);
            if inc <= cfg.tol * size || inc == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations: outer, ratio });
        }
        // residual of the level equation with finite-difference derivatives
        let (fw, fwb) = nodes.w_derivatives(&f);
        let rhs = known.add(&coupling.mul(&f));
        let res = fwb.sub(&muf.mul(&fw)).sub(&rhs);
        let s = j as i32 + 1;
        let scale = weighted_sup(&rhs, &nodes, &interior, s).max(weighted_sup(&fwb, &nodes, &interior, s));
        residuals.push(if scale == 0.0 { 0.0 } else { weighted_sup(&res, &nodes, &interior, s) / scale });
        ratios.push(ratio);
        iterations.push(outer);
        decay_constants.push(weighted_sup(&f, &nodes, &interior, j as i32));
        levels.push(f.with_label(format!("f_{j}")));
    }
    let conj_first = nodes.mask(&muf.mul(&levels[0]).add(&powers[0]));
    Ok(DerivativeChain {
        k,
        m,
        levels,
        conj_first,
        residuals,
        ratios,
        iterations,
        decay_constants,
        measured_b,
        geometry: geometry.clone(),
    })
}

/// |F_ww / F_w| dist = |f_1| dist, maximized over interior nodes.
pub fn chain_margin(chain: &DerivativeChain) -> Result<f64> {
    let grid = chain.levels[0].grid.clone();
    let nodes = Nodes::new(&grid, &chain.geometry)?;
    let interior = nodes.interior(&grid);
    Ok(weighted_sup(&chain.levels[0], &nodes, &interior, 1))
}

/// Integrates dF = a dz + b dzbar over the lattice along an axis staircase
/// from the node nearest the origin: x first then y (`x_first`), or y then x.
/// F at the start node is a z + b conj(z) (one step from 0).
fn staircase(a: &SampledField, b: &SampledField, inside: &[bool], x_first: bool) -> Vec<Option<C64>> {
    let g = &a.grid;
    let n = g.n();
    let h = g.spacing();
    let start = g.nearest(C64::new(0.0, 0.0));
    let (i0, j0) = (start % n, start / n);
    let dx = |k: usize| a.values[k] + b.values[k];
    let dy = |k: usize| (a.values[k] - b.values[k]) * C64::new(0.0, 1.0);
    let mut out: Vec<Option<C64>> = vec![None; g.len()];
    let z0 = g.node(start);
    out[start] = Some(a.values[start] * z0 + b.values[start] * z0.conj());
    // walk the first axis from the start node, then the second axis from each
    // node reached
    let idx = |p: usize, q: usize| if x_first { q * n + p } else { p * n + q };
    let (p0, q0) = if x_first { (i0, j0) } else { (j0, i0) };
    let first_d = |k: usize| if x_first { dx(k) } else { dy(k) };
    let second_d = |k: usize| if x_first { dy(k) } else { dx(k) };
    for dir in [1isize, -1] {
        let mut p = p0 as isize;
        loop {
            let np = p + dir;
            if np < 0 || np >= n as isize {
                break;
            }
            let (k, nk) = (idx(p as usize, q0), idx(np as usize, q0));
            if !inside[nk] {
                break;
            }
            let prev = out[k].expect("walked in order");
            out[nk] = Some(prev + (first_d(k) + first_d(nk)) * (0.5 * h * dir as f64));
            p = np;
        }
    }
    for p in 0..n {
        let base = idx(p, q0);
        let Some(_) = out[base] else { continue };
        for dir in [1isize, -1] {
            let mut q = q0 as isize;
            loop {
                let nq = q + dir;
                if nq < 0 || nq >= n as isize {
                    break;
                }
                let (k, nk) = (idx(p, q as usize), idx(p, nq as usize));
                if !inside[nk] {
                    break;
                }
                let prev = out[k].expect("walked in order");
                out[nk] = Some(prev + (second_d(k) + second_d(nk)) * (0.5 * h * dir as f64));
                q = nq;
            }
        }
    }
    out
}

/// Rebuilds F with F_w = e^g, F_wbar = mu e^g, where g has g_w = f_1 and
/// g_wbar = mu f_1 + mu_w, by path integration from the origin. Returns the
/// mapping and the largest discrepancy between the two staircase orders.
pub fn reconstruct_map(
    chain: &DerivativeChain,
    mu: &BeltramiCoefficient,
    residual_tol: f64,
) -> Result<(QcMapping, f64)> {
    let grid = chain.levels[0].grid.clone();
    if mu.grid() != &grid {
        return Err(Error::InvalidArgument("mu and the chain live on different grids".into()));
    }
    let nodes = Nodes::new(&grid, &chain.geometry)?;
    let inside = &nodes.inside;
    let (gz, gzb) = nodes.z_derivatives(&chain.levels[0], &chain.conj_first);
    let paths = [true, false].map(|x_first| staircase(&gz, &gzb, inside, x_first));
    let sigma: Vec<C64> = paths[0].iter().map(|v| v.unwrap_or_default()).collect();
    let muf = nodes.mask(mu.field());
    let e = SampledField::new(grid.clone(), sigma.iter().map(|s| s.exp()).collect(), "F_w")?.masked(inside);
    let eb = muf.mul(&e);
    let (fz, fzb) = nodes.z_derivatives(&e, &eb);
    let maps = [true, false].map(|x_first| staircase(&fz, &fzb, inside, x_first));

    let mut discrepancy = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in 0..grid.len() {
        if let (Some(a), Some(b)) = (maps[0][k], maps[1][k]) {
            discrepancy = discrepancy.max((a - b).norm());
            scale = scale.max(a.norm());
        }
        if let (Some(a), Some(b)) = (paths[0][k], paths[1][k]) {
            discrepancy = discrepancy.max((a - b).norm());
        }
        if maps[0][k].is_some() != maps[1][k].is_some() && inside[k] {
            return Err(Error::InvalidArgument(format!("node {} is unreachable along one staircase", grid.node(k))));
        }
    }
    let discrepancy = discrepancy / scale.max(f64::MIN_POSITIVE).max(1.0);
    if discrepancy > 10.0 * residual_tol {
        return Err(Error::PathDiscrepancy { discrepancy, limit: 10.0 * residual_tol });
    }
    let f =
        SampledField::new(grid.clone(), maps[0].iter().map(|v| v.unwrap_or_default()).collect(), "reconstructed map")?;
    // dilatation residual with finite-difference derivatives of F
    let (dw, dwb) = nodes.w_derivatives(&f);
    let interior = nodes.interior(&grid);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..grid.len() {
        if interior[k] {
            num += (dwb.values[k] - muf.values[k] * dw.values[k]).norm_sqr();
            den += dw.values[k].norm_sqr();
        }
    }
    let residual = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
    let mapping = QcMapping {
        f,
        fz: e,
        fzbar: eb,
        kind: MappingKind::Reconstructed,
        diagnostics: Diagnostics {
            iterations: chain.iterations.iter().sum(),
            residual,
            contraction_ratio: chain.ratios.iter().cloned().fold(0.0, f64::max),
        },
    };
    Ok((mapping, discrepancy))
}
