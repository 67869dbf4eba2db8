//! Empirical operator norms, decay exponents, right-inverse residuals and the
//! registry of checks run by the suite.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::wirtinger;
use crate::error::{Error, Result};
use crate::grid::{
    self, lp, lp_masked, sample, weighted_norm, ComplexGrid, DomainGeometry, SampledField, WeightedNormSpec,
};
use crate::moebius::{reflect, ReflectionRule};
use crate::params::{linear_fit, FamilySpec, HolderConfig, HolderExponent};
use crate::solver::{self, BeltramiCoefficient, ChainConfig, SampledMap, SolverConfig};
use crate::transforms::{self, Family, Kernel, OperatorSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub anchor: String,
    pub measured: BTreeMap<String, f64>,
    pub tol: f64,
    pub pass: bool,
    pub n: usize,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EstimateReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    /// The report without its runtime, for comparing runs.
    pub fn body(&self) -> String {
        serde_json::to_string(&EstimateReport { seconds: 0.0, ..self.clone() }).expect("reports serialize")
    }
}

/// Where trial fields live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialDomain {
    Plane,
    Disk,
    Strip,
}

impl TrialDomain {
    pub fn of(geometry: &DomainGeometry) -> Self {
        match geometry {
            DomainGeometry::Plane => TrialDomain::Plane,
            DomainGeometry::UnitDisk | DomainGeometry::Quasidisk(_) => TrialDomain::Disk,
            DomainGeometry::Strip => TrialDomain::Strip,
        }
    }
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A trial field f = dbar(psi) with psi smooth and rapidly decaying (plane,
/// strip) or compactly supported in the disk. Every singular operator here
/// sends such f to d(psi) up to its boundary terms.
pub fn trial_field(domain: TrialDomain, grid: &Arc<ComplexGrid>, seed: u64) -> Result<SampledField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match domain {
        TrialDomain::Plane => {
            let hw =
                grid.half_width().ok_or_else(|| Error::InvalidArgument("plane trials need a square lattice".into()))?;
            let c0 = C64::new(rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25)) * hw;
            let (a, b, c) = (random_c(&mut rng), random_c(&mut rng), random_c(&mut rng));
            let s2 = 0.015 * hw * hw;
            // psi = (a + b d + c conj(d)) e^{-|d|^2 / s2}
            sample(
                |z| {
                    let d = z - c0;
                    let e = (-d.norm_sqr() / s2).exp();
                    (c - (a + b * d + c * d.conj()) * d / s2) * e
                },
                grid,
            )
        }
        TrialDomain::Disk => {
            let r = rng.gen_range(0.25..0.45);
            let c0 = C64::from_polar(rng.gen_range(0.0..0.95 - r), rng.gen_range(0.0..std::f64::consts::TAU));
            let (a, b, c) = (random_c(&mut rng), random_c(&mut rng), random_c(&mut rng));
            // psi = (a + b d + c conj(d)) B with B = exp(1 - 1 / (1 - |d|^2 / r^2))
            sample(
                |z| {
                    let d = z - c0;
                    let q = d.norm_sqr() / (r * r);
                    if q >= 1.0 {
                        return C64::new(0.0, 0.0);
                    }
                    let bump = (1.0 - 1.0 / (1.0 - q)).exp();
                    let bump_zbar = -bump / (1.0 - q).powi(2) * d / (r * r);
                    c * bump + (a + b * d + c * d.conj()) * bump_zbar
                },
                grid,
            )
        }
        TrialDomain::Strip => {
            let (lo, hi) =
                grid.xi_range().ok_or_else(|| Error::InvalidArgument("strip trials need a strip grid".into()))?;
            let len = hi - lo;
            let modes: Vec<(f64, f64, C64)> = (0..3)
                .map(|_| {
                    (rng.gen_range(-4..=4) as f64, rng.gen_range(lo + 0.4 * len..hi - 0.3 * len), random_c(&mut rng))
                })
                .collect();
            // psi = a e^{ik phi} e^{-(xi - x0)^2 / 0.5}; dbar = (d_xi + i d_phi) / 2
            sample(
                |z| {
                    modes
                        .iter()
                        .map(|&(k, x0, a)| {
                            let psi = a * C64::from_polar(1.0, k * z.im) * (-(z.re - x0).powi(2) / 0.5).exp();
                            psi * (-(z.re - x0) / 0.5 - 0.5 * k)
                        })
                        .sum()
                },
                grid,
            )
        }
    }
}

fn domain_norm(field: &SampledField, domain: TrialDomain, p: f64) -> f64 {
    match domain {
        TrialDomain::Disk => lp_masked(field, p, &field.grid.disk_mask()),
        _ => lp(field, p),
    }
}

/// max over trials of ||T f||_p / ||f||_p for an arbitrary operator; trial k
/// uses seed + k, so more trials never lower the estimate.
pub fn norm_estimate_with(
    apply: impl Fn(&SampledField) -> Result<SampledField>,
    domain: TrialDomain,
    grid: &Arc<ComplexGrid>,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 16 {
        return Err(Error::InvalidArgument(format!("{trials} trials, at least 16 required")));
    }
    let mut best = 0.0_f64;
    for k in 0..trials {
        let f = trial_field(domain, grid, seed.wrapping_add(k as u64))?;
        let tf = apply(&f)?;
        best = best.max(domain_norm(&tf, domain, p) / domain_norm(&f, domain, p));
    }
    Ok(best)
}

pub fn operator_norm_estimate(
    spec: &OperatorSpec,
    grid: &Arc<ComplexGrid>,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    norm_estimate_with(|f| spec.apply(f), TrialDomain::of(spec.geometry()), grid, p, trials, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub r2: f64,
    /// (boundary distance of the ring maximum, ring maximum) per usable ring.
    pub rings: Vec<(f64, f64)>,
}

/// Slope of log(ring max |field|) against -log(dist) over quarter-octave
/// rings of boundary distance in `band` (default [4h, 0.2]).
pub fn decay_exponent_fit(
    field: &SampledField,
    geometry: &DomainGeometry,
    band: Option<(f64, f64)>,
) -> Result<DecayFit> {
    let h = field.grid.spacing();
    let (lo, hi) = band.unwrap_or((4.0 * h, 0.2));
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidArgument(format!("bad ring band [{lo}, {hi}]")));
    }
    let ratio = f64::powf(2.0, -0.25);
    let mut edges = vec![hi];
    while edges.last().unwrap() * ratio >= lo * (1.0 - 1e-12) {
        edges.push(edges.last().unwrap() * ratio);
    }
    let mut best = vec![(0.0_f64, 0.0_f64); edges.len().saturating_sub(1)];
    for (&z, &v) in field.grid.nodes().iter().zip(&field.values) {
        let Some((_, _, d)) = geometry.node_data(z) else { continue };
        if d > hi || d <= *edges.last().unwrap() {
            continue;
        }
        // ring j holds (hi 2^{-(j+1)/4}, hi 2^{-j/4}]
        let j = (4.0 * (hi / d).log2()).floor() as usize;
        if j < best.len() && v.norm() > best[j].1 {
            best[j] = (d, v.norm());
        }
    }
    let rings: Vec<(f64, f64)> = best.into_iter().filter(|&(d, m)| d > 0.0 && m > 0.0 && m.is_finite()).collect();
    if rings.len() < 4 {
        return Err(Error::TooFewRings(rings.len()));
    }
    let x: Vec<f64> = rings.iter().map(|(d, _)| -d.ln()).collect();
    let y: Vec<f64> = rings.iter().map(|(_, m)| m.ln()).collect();
    let (alpha, r2) = linear_fit(&x, &y);
    Ok(DecayFit { alpha, r2, rings })
}

/// Interior sup of dbar(T f) - f (Cauchy-type T) or dbar(T f) - d f
/// (Beurling-type T) by finite differences, over sup of the target.
pub fn right_inverse_residual(spec: &OperatorSpec, field: &SampledField) -> Result<f64> {
    let g = &field.grid;
    let u = spec.apply(field)?;
    let domain = TrialDomain::of(spec.geometry());
    let mask = (domain == TrialDomain::Disk).then(|| g.disk_mask());
    let (_, ub) = wirtinger(&u, mask.as_deref());
    let target = match spec.family().kernel() {
        Kernel::Cauchy => field.clone(),
        Kernel::Beurling => wirtinger(field, mask.as_deref()).0,
    };
    let (n, rows, h) = (g.n(), g.rows(), g.spacing());
    let interior = |k: usize| -> bool {
        let (i, j) = (k % n, k / n);
        match domain {
            TrialDomain::Plane => i >= 3 && j >= 3 && i + 3 < n && j + 3 < rows,
            TrialDomain::Disk => g.node(k).norm() <= 1.0 - 4.0 * h,
            TrialDomain::Strip => j >= 3 && j + 3 < rows,
        }
    };
    let scale = target.sup();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let worst =
        (0..g.len()).filter(|&k| interior(k)).map(|k| (ub.values[k] - target.values[k]).norm()).fold(0.0, f64::max);
    Ok(worst / scale)
}

pub const REGISTRY: &[(&str, &str)] = &[
    ("kz-norm", "||S||_p tends to 1 as p -> 2; counter-term norms are not close to 1"),
    ("s-isometry", "S is an isometry of L^2"),
    ("right-inverse", "C, C_m and P_H are right inverses of dbar"),
    ("cm-weighted", "C_m is bounded from weighted L^p into weighted C^0"),
    ("th-isometry", "T_H preserves the L^2 norm on the strip"),
    ("principal-closed-form", "principal solution z + C(mu + mu S mu + ...) for mu = k chi_D"),
    ("normal-normalization", "normal solution maps D onto D fixing 0 and 1"),
    ("derivative-bounds", "a <= |f_z| <= A with a, A tending to 1 as d and b_1 tend to 0"),
    ("log-bound", "|f_nu - zeta| <= C_a c^2 / (1 - d) for the logarithmic solution"),
    ("disk-reduction", "P_m, T_m with disk inversion coincide with C_m, S_m"),
    ("reflection-sandwich", "c (1 - |z|^2) <= |w - w_hat| <= C (1 - |z|^2)"),
    ("chain-univalence", "logarithmic-derivative chain residual, path independence and univalence margin"),
    ("holder-slope", "derivatives of normal solutions are Holder in the parameter"),
    ("decay-fit", "|f_z| <= C (1 - |z|)^-alpha with 0 <= alpha < 1"),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Check names; "all" expands to the whole registry.
    pub checks: Vec<String>,
    pub n: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { checks: vec!["all".into()], n: 128, seed: 7 }
    }
}

/// Resolved check ids in registry order.
pub fn resolve_checks(names: &[String]) -> Result<Vec<&'static str>> {
    let mut want = vec![false; REGISTRY.len()];
    for name in names {
        if name == "all" {
            want.iter_mut().for_each(|w| *w = true);
            continue;
        }
        let i = REGISTRY.iter().position(|(id, _)| id == name).ok_or_else(|| Error::UnknownCheck(name.clone()))?;
        want[i] = true;
    }
    Ok(REGISTRY.iter().zip(want).filter(|(_, w)| *w).map(|((id, _), _)| *id).collect())
}

pub fn run_suite(config: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let ids = resolve_checks(&config.checks)?;
    Ok(ids.into_iter().map(|id| run_check(id, config.n, config.seed)).collect())
}

type Measured = BTreeMap<String, f64>;

struct Outcome {
    measured: Measured,
    tol: f64,
    pass: bool,
}

/// Runs one registered check; solver failures become failing reports.
pub fn run_check(id: &str, n: usize, seed: u64) -> EstimateReport {
    let anchor = REGISTRY.iter().find(|(k, _)| *k == id).map_or("plumbing", |(_, a)| a);
    let t0 = Instant::now();
    let outcome = match id {
        "kz-norm" => kz_norm(n, seed),
        "s-isometry" => s_isometry(n, seed),
        "right-inverse" => right_inverse(n),
        "cm-weighted" => cm_weighted(n),
        "th-isometry" => th_isometry(n, seed),
        "principal-closed-form" => principal_closed_form(n),
        "normal-normalization" => normal_normalization(n),
        "derivative-bounds" => derivative_bounds(n, seed).map(|(o, _)| o),
        "log-bound" => log_bound(n),
        "disk-reduction" => disk_reduction(n),
        "reflection-sandwich" => reflection_sandwich(n, seed),
        "chain-univalence" => chain_univalence(n, seed),
        "holder-slope" => holder_slope(n),
        "decay-fit" => decay_fit(n, seed),
        other => Err(Error::UnknownCheck(other.to_string())),
    };
    let seconds = t0.elapsed().as_secs_f64();
    let (measured, tol, pass, error) = match outcome {
        Ok(o) => (o.measured, o.tol, o.pass, None),
        Err(e) => (Measured::new(), 0.0, false, Some(e.to_string())),
    };
    EstimateReport { id: id.to_string(), anchor: anchor.to_string(), measured, tol, pass, n, seconds, error }
}

fn measured(pairs: &[(&str, f64)]) -> Measured {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn bump(z: C64, c0: C64, r: f64) -> f64 {
    let q = (z - c0).norm_sqr() / (r * r);
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q)).exp()
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn kz_norm(n: usize, seed: u64) -> Result<Outcome> {
    let g = grid::square(n, 2.0)?;
    let s = OperatorSpec::plane(Family::Beurling)?;
    let e2 = operator_norm_estimate(&s, &g, 2.0, 64, seed)?;
    let e25 = operator_norm_estimate(&s, &g, 2.5, 64, seed)?;
    let e3 = operator_norm_estimate(&s, &g, 3.0, 64, seed)?;
    let d = grid::square(n, 1.0)?;
    let s1 = operator_norm_estimate(&OperatorSpec::disk(Family::BeurlingM, 1)?, &d, 2.0, 64, seed)?;
    let tol = 1e-3;
    let pass = (e2 - 1.0).abs() <= tol && e2 <= e25 && e25 <= e3 && s1 >= 1.0;
    Ok(Outcome { measured: measured(&[("p2", e2), ("p2_5", e25), ("p3", e3), ("s1_p2", s1)]), tol, pass })
}

fn s_isometry(n: usize, seed: u64) -> Result<Outcome> {
    let g = grid::square(n, 2.0)?;
    let mut worst = 0.0_f64;
    for k in 0..16 {
        let f = trial_field(TrialDomain::Plane, &g, seed.wrapping_add(k))?;
        worst = worst.max((transforms::beurling(&f)?.l2() / f.l2() - 1.0).abs());
    }
    let tol = 1e-6;
    Ok(Outcome { measured: measured(&[("max_deviation", worst)]), tol, pass: worst <= tol })
}

/// Residuals of dbar C, dbar C_3 and dbar P_H on smooth bumps at size n.
pub fn right_inverse_residuals(n: usize) -> Result<[f64; 3]> {
    let g = grid::square(n, 2.0)?;
    let f = sample(|z| real(bump(z, C64::new(0.1, 0.2), 1.0)), &g)?;
    let c = right_inverse_residual(&OperatorSpec::plane(Family::Cauchy)?, &f)?;
    let d = grid::square(n, 1.0)?;
    let f = sample(|z| C64::new(1.0, 0.3) * bump(z, C64::new(0.1, -0.1), 0.4), &d)?;
    let cm = right_inverse_residual(&OperatorSpec::disk(Family::CauchyM, 3)?, &f)?;
    let s = grid::strip(n, 2 * n, -12.0, 1.0)?;
    let f = sample(|z| C64::from_polar(1.0, z.im) * (-(z.re + 5.0).powi(2) / 2.0).exp(), &s)?;
    let ph = right_inverse_residual(&OperatorSpec::strip(Family::StripCauchy)?, &f)?;
    Ok([c, cm, ph])
}

fn right_inverse(n: usize) -> Result<Outcome> {
    let a = right_inverse_residuals(n)?;
    let b = right_inverse_residuals(2 * n)?;
    let tol = 1e-3;
    let pass = (0..3).all(|i| b[i] <= tol && a[i] >= 3.0 * b[i]);
    let m = measured(&[
        ("cauchy_n", a[0]),
        ("cauchy_2n", b[0]),
        ("cauchy_m3_n", a[1]),
        ("cauchy_m3_2n", b[1]),
        ("strip_cauchy_n", a[2]),
        ("strip_cauchy_2n", b[2]),
    ]);
    Ok(Outcome { measured: m, tol, pass })
}

/// ||C_m f||_{inf,2} / ||f||_{4,2} for f = (1 - |z|)^-2 z / |z| cut at 1 - 4h.
/// A radial density would make the plain transform bounded by symmetry.
pub fn weighted_ratio(n: usize, m: usize) -> Result<f64> {
    let g = grid::square(n, 1.0)?;
    let h = g.spacing();
    let f =
        sample(|z| if z.norm() <= 1.0 - 4.0 * h { z / z.norm() * (1.0 - z.norm()).powi(-2) } else { real(0.0) }, &g)?;
    let u = transforms::cauchy_m(&f, m)?;
    let out = WeightedNormSpec::new(f64::INFINITY, 2.0, DomainGeometry::UnitDisk)?;
    let inp = WeightedNormSpec::new(4.0, 2.0, DomainGeometry::UnitDisk)?;
    Ok(weighted_norm(&u, &out) / weighted_norm(&f, &inp))
}

fn cm_weighted(n: usize) -> Result<Outcome> {
    let (c3a, c3b) = (weighted_ratio(n, 3)?, weighted_ratio(2 * n, 3)?);
    let (c0a, c0b) = (weighted_ratio(n, 0)?, weighted_ratio(2 * n, 0)?);
    let tol = 0.25;
    let pass = c3b <= (1.0 + tol) * c3a && c0b > (1.0 + tol) * c0a;
    let m = measured(&[("c3_n", c3a), ("c3_2n", c3b), ("c0_n", c0a), ("c0_2n", c0b)]);
    Ok(Outcome { measured: m, tol, pass })
}

fn th_isometry(n: usize, seed: u64) -> Result<Outcome> {
    let g = grid::strip((n / 2).max(16), 2 * n, -12.0, 2.0)?;
    let e = operator_norm_estimate(&OperatorSpec::strip(Family::StripBeurling)?, &g, 2.0, 64, seed)?;
    let tol = 1e-3;
    Ok(Outcome { measured: measured(&[("p2", e)]), tol, pass: (e - 1.0).abs() <= tol })
}

fn principal_closed_form(n: usize) -> Result<Outcome> {
    let g = grid::square(n, 2.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| real(if z.norm() < 1.0 { 0.5 } else { 0.0 }), &g, 0.5)?;
    let f = solver::principal_solution(&mu, &SolverConfig::default())?;
    let mut err = 0.0_f64;
    let mut jac = f64::INFINITY;
    for (k, &z) in g.nodes().iter().enumerate() {
        jac = jac.min(f.fz.values[k].norm_sqr() - f.fzbar.values[k].norm_sqr());
        if (z.norm() - 1.0).abs() <= 4.0 * h {
            continue;
        }
        let exact = if z.norm() < 1.0 { z + 0.5 * z.conj() } else { z + 0.5 / z };
        err = err.max((f.f.values[k] - exact).norm());
    }
    let tol = 5.0 * h;
    let ratio = f.diagnostics.contraction_ratio;
    let m = measured(&[("sup_error", err), ("min_jacobian", jac), ("contraction_ratio", ratio)]);
    Ok(Outcome { measured: m, tol, pass: err <= tol && jac > 0.0 && ratio <= 0.6 })
}

fn normal_normalization(n: usize) -> Result<Outcome> {
    let g = grid::square(n, 1.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| if z.norm() < 1.0 { 0.2 * z / z.conj() } else { real(0.0) }, &g, 0.2)?;
    let f = solver::normal_solution(&mu)?;
    let (mut err, mut top, mut rim) = (0.0_f64, 0.0_f64, f64::INFINITY);
    for (k, &z) in g.nodes().iter().enumerate() {
        let r = z.norm();
        if r >= 1.0 {
            continue;
        }
        let v = f.f.values[k];
        top = top.max(v.norm());
        if r > 1.0 - 2.0 * h {
            rim = rim.min(v.norm());
        }
        if r <= 1.0 - 4.0 * h {
            err = err.max((v - z * r.sqrt()).norm());
        }
    }
    let zero = f.f.values[g.nearest(real(0.0))].norm();
    let one = (f.f.values[g.nearest(real(1.0 - h))] - 1.0).norm();
    let tol = 10.0 * h;
    let pass = err <= tol && zero <= tol && one <= tol && top <= 1.0 + tol && rim >= 1.0 - tol;
    let m = measured(&[
        ("sup_error", err),
        ("at_zero", zero),
        ("at_one", one),
        ("max_modulus", top),
        ("rim_min_modulus", rim),
    ]);
    Ok(Outcome { measured: m, tol, pass })
}

/// mu = d (1 - |z|)^{-i} on D: |mu| = d and |mu_z| = |mu_zbar| = d / (2 (1 - |z|)).
pub fn oscillating_coefficient(g: &Arc<ComplexGrid>, d: f64, seed: u64) -> Result<BeltramiCoefficient> {
    BeltramiCoefficient::from_rule(
        move |z| if z.norm() < 1.0 { C64::from_polar(d, -(1.0 - z.norm()).ln()) } else { real(0.0) },
        g,
        d,
    )?
    .with_growth(vec![(1, d)], seed)
}

pub const BOUNDS_SCHEDULE: [f64; 3] = [0.3, 0.15, 0.05];

/// (min, max) of |f_z| on |z| <= 0.9 for the normal solutions of the
/// oscillating coefficients along the schedule, and the solutions' f_z.
pub fn derivative_bound_measurements(n: usize, seed: u64) -> Result<Vec<(f64, f64, SampledField)>> {
    let g = grid::square(n, 1.0)?;
    let mut out = Vec::new();
    for d in BOUNDS_SCHEDULE {
        let mu = oscillating_coefficient(&g, d, seed)?;
        let f = solver::normal_solution(&mu)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (z, v) in g.nodes().iter().zip(&f.fz.values) {
            if z.norm() <= 0.9 {
                lo = lo.min(v.norm());
                hi = hi.max(v.norm());
            }
        }
        out.push((lo, hi, f.fz));
    }
    Ok(out)
}

fn derivative_bounds(n: usize, seed: u64) -> Result<(Outcome, Vec<SampledField>)> {
    let rows = derivative_bound_measurements(n, seed)?;
    let mut m = Measured::new();
    for (d, (a, big_a, _)) in BOUNDS_SCHEDULE.iter().zip(&rows) {
        m.insert(format!("a_{d}"), *a);
        m.insert(format!("A_{d}"), *big_a);
    }
    let pass = rows.iter().all(|(a, big_a, _)| *a > 0.0 && big_a.is_finite())
        && rows.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
    Ok((Outcome { measured: m, tol: 0.0, pass }, rows.into_iter().map(|r| r.2).collect()))
}

fn smooth_step(x: f64) -> f64 {
    let a = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    a(-x) / (a(-x) + a(1.0 + x))
}

/// sup |f_nu - zeta| for nu = c e^xi cut off above xi = 0, at c = 0.1, 0.2.
pub fn log_deviations(n: usize) -> Result<[f64; 2]> {
    let g = grid::strip((n / 2).max(16), 2 * n, -12.0, 2.0)?;
    let mut out = [0.0; 2];
    for (slot, c) in out.iter_mut().zip([0.1, 0.2]) {
        let nu = BeltramiCoefficient::from_rule(move |z| real(c * z.re.exp() * smooth_step(z.re)), &g, c)?;
        *slot = solver::principal_log_solution(&nu, &SolverConfig::default())?.deviation;
    }
    Ok(out)
}

fn log_bound(n: usize) -> Result<Outcome> {
    let [a, b] = log_deviations(n)?;
    let ratio = b / a;
    let m = measured(&[("deviation_c0_1", a), ("deviation_c0_2", b), ("ratio", ratio)]);
    Ok(Outcome { measured: m, tol: 2.0, pass: (2.0..=8.0).contains(&ratio) })
}

fn disk_reduction(n: usize) -> Result<Outcome> {
    let g = grid::square(n, 1.0)?;
    let f = sample(|z| C64::new(1.0, -0.5) * bump(z, C64::new(0.2, 0.1), 0.6), &g)?;
    let rule = ReflectionRule::disk();
    let geo = DomainGeometry::UnitDisk;
    let pc = transforms::domain_cauchy_m(&f, &geo, &rule, 2)?;
    let ps = transforms::domain_beurling_m(&f, &geo, &rule, 2)?;
    let c = transforms::cauchy_m(&f, 2)?;
    let s = transforms::beurling_m(&f, 2)?;
    let ec = pc.sub(&c).sup() / c.sup();
    let es = ps.sub(&s).sup() / s.sup();
    let tol = 1e-10;
    Ok(Outcome { measured: measured(&[("cauchy", ec), ("beurling", es)]), tol, pass: ec <= tol && es <= tol })
}

fn reflection_sandwich(n: usize, seed: u64) -> Result<Outcome> {
    let g = grid::square(n, 2.0)?;
    let mu = BeltramiCoefficient::from_rule(|z| C64::new(0.3, 0.1) * bump(z, real(0.0), 1.5), &g, 0.32)?;
    let map = solver::principal_solution(&mu, &SolverConfig::default())?;
    let q = grid::Quasidisk::new(Arc::new(SampledMap::new(&map)), 512);
    let rule = ReflectionRule::pullback(DomainGeometry::Quasidisk(Arc::new(q)))?;
    let param = SampledMap::new(&map);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..200 {
        let z = C64::from_polar(rng.gen_range(0.05_f64..0.95), rng.gen_range(0.0..std::f64::consts::TAU));
        let w = grid::ParamMap::jet(&param, z).f;
        let ratio = (w - reflect(&rule, w)?).norm() / (1.0 - z.norm_sqr());
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(Outcome { measured: measured(&[("c", lo), ("C", hi)]), tol: 0.0, pass: lo > 0.0 && hi.is_finite() })
}

fn chain_univalence(n: usize, seed: u64) -> Result<Outcome> {
    let g = grid::square(n, 1.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(
        |z| real(0.03 * (1.0 - z.norm_sqr()).max(0.0) * bump(z, real(0.0), 1.0)),
        &g,
        0.03,
    )?;
    let rule = ReflectionRule::disk();
    let chain = solver::derivative_chain_solve(&mu, &DomainGeometry::UnitDisk, Some(&rule), &ChainConfig::new(1, 8))?;
    let (map, disc) = solver::reconstruct_map(&chain, &mu, 1e-3)?;
    let margin = solver::chain_margin(&chain)?;
    let inj = solver::injectivity_sample(&map.f, &g.disk_mask(), 10_000, 10.0 * h, seed);
    let tol = 1e-3;
    let pass = chain.residuals[0] <= tol
        && disc <= tol
        && map.diagnostics.residual <= tol
        && margin <= 0.5
        && inj.violations == 0
        && inj.pairs == 10_000;
    let m = measured(&[
        ("chain_residual", chain.residuals[0]),
        ("path_discrepancy", disc),
        ("dilatation_residual", map.diagnostics.residual),
        ("univalence_margin", margin),
        ("measured_b", chain.measured_b),
        ("injectivity_violations", inj.violations as f64),
        ("min_image_distance", inj.min_image_distance),
    ]);
    Ok(Outcome { measured: m, tol, pass })
}

/// 0.25 (1 - |z|^2) exp(i t (1 - |z|^2)^-1) for t in [0, 1]: mixed derivatives
/// of order up to 2 grow like (1 - |z|)^-2.
pub fn holder_test_family() -> Result<FamilySpec> {
    FamilySpec::new(
        |z: C64, t: &[f64]| {
            let e = 1.0 - z.norm_sqr();
            if e <= 0.0 {
                real(0.0)
            } else {
                C64::from_polar(0.25 * e, t[0] / e)
            }
        },
        vec![(0.0, 1.0)],
        0.25,
    )?
    .with_param_growth(2, 1.0, 0)
}

fn holder_slope(n: usize) -> Result<Outcome> {
    let cfg = HolderConfig { n, t0: vec![0.5], ladder: vec![0.2, 0.1, 0.05, 0.025], ..HolderConfig::default() };
    let est = crate::params::holder_modulus(&holder_test_family()?, &cfg)?;
    let constant = FamilySpec::new(|z: C64, _: &[f64]| 0.2 * z * bump(z, real(0.0), 1.0), vec![(0.0, 1.0)], 0.2)?;
    let flat = crate::params::holder_modulus(&constant, &HolderConfig { n, ..cfg })?;
    let beta = match est.beta {
        HolderExponent::Fitted(b) => b,
        HolderExponent::Saturated => f64::NAN,
    };
    let r2 = est.min_r2.unwrap_or(f64::NAN);
    let pass = beta > 0.0 && beta <= 1.0 && r2 >= 0.9 && flat.beta == HolderExponent::Saturated;
    let m = measured(&[
        ("beta", beta),
        ("min_slope", est.min_slope.unwrap_or(f64::NAN)),
        ("min_r2", r2),
        ("constant_family_saturated", if flat.beta == HolderExponent::Saturated { 1.0 } else { 0.0 }),
    ]);
    Ok(Outcome { measured: m, tol: 0.9, pass })
}

fn decay_fit(n: usize, seed: u64) -> Result<Outcome> {
    let geo = DomainGeometry::UnitDisk;
    let coarse = derivative_bounds(n, seed)?.1;
    let fine = derivative_bounds(2 * n, seed)?.1;
    let mut m = Measured::new();
    let mut pass = true;
    for (d, (a, b)) in BOUNDS_SCHEDULE.iter().zip(coarse.iter().zip(&fine)) {
        let fa = decay_exponent_fit(a, &geo, None)?;
        let fb = decay_exponent_fit(b, &geo, None)?;
        m.insert(format!("alpha_{d}_n"), fa.alpha);
        m.insert(format!("alpha_{d}_2n"), fb.alpha);
        pass &= fa.alpha < 1.0 && fb.alpha < 1.0 && (fa.alpha - fb.alpha).abs() <= 0.1;
    }
    Ok(Outcome { measured: m, tol: 0.1, pass })
}
