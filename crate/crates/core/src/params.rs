//! Beltrami coefficients depending on a real parameter t in a box of
//! dimension at most 4: smoothing in t and Hölder exponents of the normal
//! solutions as t moves.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::wirtinger;
use crate::error::{Error, Result};
use crate::grid::{self, interp_bicubic, ComplexGrid, SampledField};
use crate::solver::{normal_solution_with, rule_derivative, BeltramiCoefficient, SolverConfig};

pub const MAX_DIM: usize = 4;
const SPOT_CHECKS: usize = 50;
const SLACK: f64 = 1.05;

pub type FamilyRule = Arc<dyn Fn(C64, &[f64]) -> C64 + Send + Sync>;

/// mu(z, t) for z in the unit disk and t in a box, with certificates
/// uniform in t.
#[derive(Clone)]
pub struct FamilySpec {
    rule: FamilyRule,
    bounds: Vec<(f64, f64)>,
    d: f64,
    growth: Vec<(usize, f64)>,
    param_growth: Option<(usize, f64)>,
}

impl fmt::Debug for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilySpec")
            .field("bounds", &self.bounds)
            .field("d", &self.d)
            .field("growth", &self.growth)
            .field("param_growth", &self.param_growth)
            .finish_non_exhaustive()
    }
}

fn random_disk_point(rng: &mut ChaCha8Rng, r_max: f64) -> C64 {
    loop {
        let z = C64::new(rng.gen_range(-r_max..r_max), rng.gen_range(-r_max..r_max));
        if z.norm() < r_max {
            return z;
        }
    }
}

impl FamilySpec {
    pub fn new(
        rule: impl Fn(C64, &[f64]) -> C64 + Send + Sync + 'static,
        bounds: Vec<(f64, f64)>,
        d: f64,
    ) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!("parameter dimension {} outside 1..={MAX_DIM}", bounds.len())));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad parameter interval [{lo}, {hi}]")));
        }
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidArgument(format!("sup bound d = {d} must lie in [0, 1)")));
        }
        let family = FamilySpec { rule: Arc::new(rule), bounds, d, growth: Vec::new(), param_growth: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..SPOT_CHECKS {
            let z = random_disk_point(&mut rng, 1.0);
            let t = family.random_t(&mut rng);
            let v = family.at(z, &t);
            if !v.is_finite() || v.norm() > d * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("|mu({z}, {t:?})| = {} exceeds d = {d}", v.norm())));
            }
        }
        Ok(family)
    }

    fn random_t(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo }).collect()
    }

    /// Certifies |d^a dbar^b mu| <= b_k (1 - |z|)^-k for a + b = k, checked at
    /// random (z, t).
    pub fn with_growth(mut self, certificates: Vec<(usize, f64)>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SPOT_CHECKS {
            let z = random_disk_point(&mut rng, 0.95);
            let t = self.random_t(&mut rng);
            let step = 1e-3 * (1.0 - z.norm());
            let rule = self.rule.clone();
            let slice = move |w: C64| rule(w, &t);
            for &(k, b) in &certificates {
                for a in 0..=k {
                    let v = rule_derivative(&slice, z, a, k - a, step).norm();
                    let bound = b * (1.0 - z.norm()).powi(-(k as i32));
                    if v > SLACK * bound {
                        return Err(Error::InvalidArgument(format!(
                            "growth certificate ({k}, {b}) fails at z = {z}: {v:e} > {bound:e}"
                        )));
                    }
                }
            }
        }
        self.growth = certificates;
        Ok(self)
    }

    /// Certifies |d_t mu| and |d_t d_z mu|, |d_t d_zbar mu| <= C (1 - |z|)^-N.
    pub fn with_param_growth(mut self, n: usize, c: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SPOT_CHECKS {
            let z = random_disk_point(&mut rng, 0.95);
            let t = self.random_t(&mut rng);
            let bound = c * (1.0 - z.norm()).powi(-(n as i32));
            let step = 1e-3 * (1.0 - z.norm());
            for axis in 0..self.dim() {
                let dt = 1e-4 * (self.bounds[axis].1 - self.bounds[axis].0).max(1e-3);
                let shifted = |s: f64| {
                    let mut u = t.clone();
                    u[axis] += s * dt;
                    u
                };
                let (tp, tm) = (shifted(1.0), shifted(-1.0));
                let rule = self.rule.clone();
                let dmu = move |w: C64| (rule(w, &tp) - rule(w, &tm)) / (2.0 * dt);
                let values = [dmu(z), rule_derivative(&dmu, z, 1, 0, step), rule_derivative(&dmu, z, 0, 1, step)];
                if let Some(v) = values.iter().map(|v| v.norm()).find(|&v| v > SLACK * bound) {
                    return Err(Error::InvalidArgument(format!(
                        "parameter growth ({n}, {c}) fails at z = {z}, t = {t:?}: {v:e} > {bound:e}"
                    )));
                }
            }
        }
        self.param_growth = Some((n, c));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
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

    pub fn at(&self, z: C64, t: &[f64]) -> C64 {
        (self.rule)(z, t)
    }

    fn check_t(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::InvalidArgument(format!("t has {} components, family has {}", t.len(), self.dim())));
        }
        Ok(())
    }

    /// mu(., t) on `grid`, zero outside the unit disk.
    pub fn coefficient(&self, t: &[f64], grid: &Arc<ComplexGrid>) -> Result<BeltramiCoefficient> {
        self.check_t(t)?;
        let rule = self.rule.clone();
        let t = t.to_vec();
        BeltramiCoefficient::from_rule(
            move |z| if z.norm() < 1.0 { rule(z, &t) } else { C64::new(0.0, 0.0) },
            grid,
            self.d,
        )
    }

    /// The family conj(mu(z, t)) with the same certificates.
    pub fn conj(&self) -> FamilySpec {
        let rule = self.rule.clone();
        FamilySpec { rule: Arc::new(move |z, t| rule(z, t).conj()), ..self.clone() }
    }
}

/// Smoothing in t by a cap kernel whose radius shrinks towards the circle:
/// delta(z) = [b / C (1 - |z|)^(s + 2m - 1)]^(1 / beta).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MollifierSchedule {
    /// Target accuracy.
    pub b: f64,
    pub beta: f64,
    pub s: f64,
    /// Constant C in the radius rule.
    pub c: f64,
    /// Quadrature points per axis of the unit ball; 0 picks a default by dimension.
    pub points_per_axis: usize,
    /// The radius must stay resolvable for |z| up to this value.
    pub probe_radius: f64,
}

impl Default for MollifierSchedule {
    fn default() -> Self {
        MollifierSchedule { b: 0.01, beta: 0.25, s: 2.0, c: 1.0, points_per_axis: 0, probe_radius: 0.9 }
    }
}

/// exp(-1 / (1 - |u|^2)) inside the unit ball.
pub fn cap(u: &[f64]) -> f64 {
    let r2: f64 = u.iter().map(|x| x * x).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

impl MollifierSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.b > 0.0 && self.beta > 0.0 && self.s >= 0.0 && self.c > 0.0;
        if !ok || !(0.0..1.0).contains(&self.probe_radius) {
            return Err(Error::InvalidArgument(format!("invalid mollifier schedule {self:?}")));
        }
        Ok(())
    }

    pub fn radius(&self, z: C64, order_m: usize) -> f64 {
        let dist = (1.0 - z.norm()).max(0.0);
        (self.b / self.c * dist.powf(self.s + 2.0 * order_m as f64 - 1.0)).powf(1.0 / self.beta)
    }

    fn points(&self, dim: usize) -> usize {
        match (self.points_per_axis, dim) {
            (0, 1 | 2) => 41,
            (0, 3) => 15,
            (0, _) => 9,
            (q, _) => q,
        }
    }

    /// Midpoint nodes of the unit ball in `dim` dimensions with cap weights
    /// normalized to unit mass.
    pub fn quadrature(&self, dim: usize) -> Vec<(Vec<f64>, f64)> {
        let q = self.points(dim);
        let step = 2.0 / q as f64;
        let mut out = Vec::new();
        let total = q.pow(dim as u32);
        for mut idx in 0..total {
            let mut u = Vec::with_capacity(dim);
            for _ in 0..dim {
                u.push(-1.0 + (idx % q) as f64 * step + 0.5 * step);
                idx /= q;
            }
            let w = cap(&u);
            if w > 0.0 {
                out.push((u, w));
            }
        }
        let mass: Vec<f64> = out.iter().map(|(_, w)| *w).collect();
        let mass = grid::pairwise_sum(&mass);
        for (_, w) in &mut out {
            *w /= mass;
        }
        out
    }

    /// Spacing of the quadrature nodes in t at radius delta.
    fn t_spacing(&self, dim: usize, delta: f64) -> f64 {
        2.0 * delta / self.points(dim) as f64
    }
}

fn resolvable(spacing: f64, bounds: &[(f64, f64)]) -> bool {
    let scale = bounds.iter().fold(1.0_f64, |m, &(lo, hi)| m.max(lo.abs()).max(hi.abs()));
    spacing >= 64.0 * f64::EPSILON * scale
}

/// The family convolved in t against the cap at radius delta(z). Shifted
/// parameters are clamped to the box, and where delta(z) is below floating
/// point resolution the family is returned unchanged.
pub fn mollify_family(family: &FamilySpec, schedule: &MollifierSchedule, order_m: usize) -> Result<FamilySpec> {
    schedule.validate()?;
    let dim = family.dim();
    let edge = schedule.radius(C64::new(schedule.probe_radius, 0.0), order_m);
    if !resolvable(schedule.t_spacing(dim, edge), &family.bounds) {
        return Err(Error::Resolution(format!(
            "mollifier radius {edge:e} at |z| = {} is below the parameter resolution",
            schedule.probe_radius
        )));
    }
    let quad = Arc::new(schedule.quadrature(dim));
    let rule = family.rule.clone();
    let bounds = family.bounds.clone();
    let sched = schedule.clone();
    let smoothed = move |z: C64, t: &[f64]| {
        let delta = sched.radius(z, order_m);
        if !resolvable(sched.t_spacing(t.len(), delta), &bounds) {
            return rule(z, t);
        }
        let mut shifted = vec![0.0; t.len()];
        let mut acc = C64::new(0.0, 0.0);
        for (u, w) in quad.iter() {
            for i in 0..t.len() {
                shifted[i] = (t[i] - delta * u[i]).clamp(bounds[i].0, bounds[i].1);
            }
            acc += *w * rule(z, &shifted);
        }
        acc
    };
    Ok(FamilySpec {
        rule: Arc::new(smoothed),
        bounds: family.bounds.clone(),
        d: family.d,
        growth: Vec::new(),
        param_growth: None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct HolderConfig {
    /// Lattice size of the square [-1, 1]^2.
    pub n: usize,
    /// Base parameter; empty means the box center.
    pub t0: Vec<f64>,
    /// Direction of the parameter step; empty means the first axis.
    pub direction: Vec<f64>,
    /// Derivative order: 0 for f, 1 for f_z, 2 for f_zz.
    pub k: usize,
    pub probes: Vec<C64>,
    /// Step sizes; empty means 4 rungs halving from a quarter of the first side.
    pub ladder: Vec<f64>,
    pub tol: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            n: 128,
            t0: Vec::new(),
            direction: Vec::new(),
            k: 1,
            probes: vec![
                C64::new(0.0, 0.0),
                C64::new(0.25, 0.0),
                C64::new(0.0, 0.4),
                C64::new(-0.35, -0.35),
                C64::new(0.5, 0.0),
            ],
            ladder: Vec::new(),
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderExponent {
    /// Every difference sits at the solver tolerance: no dependence on t.
    Saturated,
    Fitted(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeFit {
    pub z: C64,
    /// None when the probe saw no change above the tolerance.
    pub slope: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderRow {
    pub z: C64,
    pub dt: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderEstimate {
    /// Smallest fitted slope, clamped to 1.
    pub beta: HolderExponent,
    pub min_slope: Option<f64>,
    pub min_r2: Option<f64>,
    /// Set when some probe fit has R^2 below 0.9.
    pub flagged: bool,
    pub probes: Vec<ProbeFit>,
    pub table: Vec<HolderRow>,
}

/// Least-squares slope and R^2 of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

fn derivative_field(
    family: &FamilySpec,
    t: &[f64],
    g: &Arc<ComplexGrid>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<SampledField> {
    let mu = family.coefficient(t, g)?;
    let f = normal_solution_with(&mu, cfg)?;
    Ok(match k {
        0 => f.f,
        1 => f.fz,
        _ => wirtinger(&f.fz, Some(&g.disk_mask())).0,
    })
}

/// Differences |f_(k)(z, t0 + dt e) - f_(k)(z, t0)| of the normal solutions
/// along the ladder, and the log-log slope per probe.
pub fn holder_modulus(family: &FamilySpec, cfg: &HolderConfig) -> Result<HolderEstimate> {
    if cfg.k > 2 {
        return Err(Error::InvalidArgument(format!("derivative order k = {} above 2", cfg.k)));
    }
    let dim = family.dim();
    let t0 =
        if cfg.t0.is_empty() { family.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect() } else { cfg.t0.clone() };
    family.check_t(&t0)?;
    let mut dir = if cfg.direction.is_empty() {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    } else {
        cfg.direction.clone()
    };
    family.check_t(&dir)?;
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero step direction".into()));
    }
    dir.iter_mut().for_each(|x| *x /= norm);
    let ladder = if cfg.ladder.is_empty() {
        let side = family.bounds[0].1 - family.bounds[0].0;
        (0..4).map(|j| 0.25 * side / f64::powi(2.0, j)).collect()
    } else {
        cfg.ladder.clone()
    };
    if ladder.len() < 2 || ladder.iter().any(|&dt| !(dt > 0.0)) {
        return Err(Error::InvalidArgument("the step ladder needs at least two positive rungs".into()));
    }
    if let Some(&z) = cfg.probes.iter().find(|z| z.norm() >= 1.0) {
        return Err(Error::InvalidArgument(format!("probe {z} outside the unit disk")));
    }

    let g = grid::square(cfg.n, 1.0)?;
    let scfg = SolverConfig { tol: cfg.tol, ..SolverConfig::default() };
    let base = derivative_field(family, &t0, &g, cfg.k, &scfg)?;
    let base_at: Vec<C64> = cfg.probes.iter().map(|&z| interp_bicubic(&base, z)).collect();
    let mut table = Vec::new();
    let mut diffs = vec![Vec::new(); cfg.probes.len()];
    for &dt in &ladder {
        let t: Vec<f64> = t0.iter().zip(&dir).map(|(a, e)| a + dt * e).collect();
        let field = derivative_field(family, &t, &g, cfg.k, &scfg)?;
        for (p, &z) in cfg.probes.iter().enumerate() {
            let difference = (interp_bicubic(&field, z) - base_at[p]).norm();
            diffs[p].push(difference);
            table.push(HolderRow { z, dt, difference });
        }
    }

    let mut probes = Vec::new();
    for (p, &z) in cfg.probes.iter().enumerate() {
        let floor = 2.0 * cfg.tol * base_at[p].norm().max(1.0);
        let (x, y): (Vec<f64>, Vec<f64>) =
            ladder.iter().zip(&diffs[p]).filter(|(_, &d)| d > floor).map(|(dt, d)| (dt.ln(), d.ln())).unzip();
        if x.len() < 2 {
            probes.push(ProbeFit { z, slope: None, r2: None });
        } else {
            let (slope, r2) = linear_fit(&x, &y);
            probes.push(ProbeFit { z, slope: Some(slope), r2: Some(r2) });
        }
    }
    let min_slope = probes.iter().filter_map(|p| p.slope).reduce(f64::min);
    let min_r2 = probes.iter().filter_map(|p| p.r2).reduce(f64::min);
    let beta = match min_slope {
        None => HolderExponent::Saturated,
        Some(s) => HolderExponent::Fitted(s.min(1.0)),
    };
    Ok(HolderEstimate { beta, min_slope, min_r2, flagged: min_r2.is_some_and(|r| r < 0.9), probes, table })
}

/// One named factor of a family term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Factor {
    /// exp(1 - 1 / (1 - |z - c|^2 / r^2)) inside the disk of radius r.
    Bump {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// 1 on |z - c| <= r.
    Indicator {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// (1 - |z|^2)^power, zero outside the disk.
    Edge { power: f64 },
    /// exp(i freq t_axis (1 - |z|^2)^-power), 1 outside the disk.
    Phase {
        freq: f64,
        power: f64,
        #[serde(default)]
        axis: usize,
    },
}

impl Factor {
    fn eval(&self, z: C64, t: &[f64]) -> C64 {
        let real = |x: f64| C64::new(x, 0.0);
        match *self {
            Factor::Bump { center, radius } => {
                let q = (z - C64::new(center[0], center[1])).norm_sqr() / (radius * radius);
                real(if q >= 1.0 { 0.0 } else { (1.0 - 1.0 / (1.0 - q)).exp() })
            }
            Factor::Indicator { center, radius } => {
                real(if (z - C64::new(center[0], center[1])).norm() <= radius { 1.0 } else { 0.0 })
            }
            Factor::Edge { power } => real((1.0 - z.norm_sqr()).max(0.0).powf(power)),
            Factor::Phase { freq, power, axis } => {
                let e = 1.0 - z.norm_sqr();
                if e <= 0.0 {
                    real(1.0)
                } else {
                    C64::from_polar(1.0, freq * t[axis] * e.powf(-power))
                }
            }
        }
    }
}

/// coef z^z zbar^zbar prod_j t_j^t[j] prod factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: [f64; 2],
    #[serde(default)]
    pub z: u32,
    #[serde(default)]
    pub zbar: u32,
    #[serde(default)]
    pub t: Vec<u32>,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

impl Term {
    fn eval(&self, z: C64, t: &[f64]) -> C64 {
        let mut v = C64::new(self.coef[0], self.coef[1]) * z.powu(self.z) * z.conj().powu(self.zbar);
        for (x, &p) in t.iter().zip(&self.t) {
            v *= x.powi(p as i32);
        }
        for f in &self.factors {
            v *= f.eval(z, t);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrowth {
    pub n: usize,
    pub c: f64,
}

/// A family as written in JSON: a sum of terms, each a monomial in z, conj z
/// and t times named factors, plus certificates and run settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyFile {
    pub d: f64,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub growth: Vec<(usize, f64)>,
    #[serde(default)]
    pub param_growth: Option<ParamGrowth>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub holder: HolderConfig,
    #[serde(default)]
    pub mollifier: MollifierSchedule,
    #[serde(default)]
    pub order_m: usize,
}

impl FamilyFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<FamilySpec> {
        let dim = self.bounds.len();
        for term in &self.terms {
            if term.t.len() > dim {
                return Err(Error::InvalidArgument(format!(
                    "term lists {} t powers for a {dim}-dimensional box",
                    term.t.len()
                )));
            }
            for f in &term.factors {
                match *f {
                    Factor::Phase { axis, .. } if axis >= dim => {
                        return Err(Error::InvalidArgument(format!("phase axis {axis} outside the box")))
                    }
                    Factor::Bump { radius, .. } | Factor::Indicator { radius, .. } if !(radius > 0.0) => {
                        return Err(Error::InvalidArgument(format!("factor radius {radius} must be positive")))
                    }
                    _ => {}
                }
            }
        }
        let terms = self.terms.clone();
        let rule = move |z: C64, t: &[f64]| terms.iter().map(|term| term.eval(z, t)).sum();
        let mut family = FamilySpec::new(rule, self.bounds.iter().map(|b| (b[0], b[1])).collect(), self.d)?;
        if !self.growth.is_empty() {
            family = family.with_growth(self.growth.clone(), self.seed)?;
        }
        if let Some(pg) = self.param_growth {
            family = family.with_param_growth(pg.n, pg.c, self.seed)?;
        }
        Ok(family)
    }
}
