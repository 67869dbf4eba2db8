//! Lattices over the plane, the unit disk and the periodic strip, the fields
//! sampled on them, and boundary-weighted norms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    SquareLattice,
    PolarDisk,
    StripPeriodic,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::SquareLattice => "square-lattice",
            GridKind::PolarDisk => "polar-disk",
            GridKind::StripPeriodic => "strip-periodic",
        }
    }
}

/// Region covered by a grid. `n_theta` and `n_xi` default to the grid's `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Extent {
    Box {
        center: [f64; 2],
        half_width: f64,
    },
    Disk {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_theta: Option<usize>,
    },
    Strip {
        xi_min: f64,
        xi_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_xi: Option<usize>,
    },
}

impl Extent {
    pub fn square(half_width: f64) -> Self {
        Extent::Box { center: [0.0, 0.0], half_width }
    }

    pub fn strip(xi_min: f64, xi_max: f64) -> Self {
        Extent::Strip { xi_min, xi_max, n_xi: None }
    }
}

/// A sampled lattice with per-node area weights.
///
/// Node order is row-major for square lattices (x fastest), radius-major for
/// polar grids and xi-major for strips (phi fastest, so every xi row is one
/// period).
#[derive(Clone)]
pub struct ComplexGrid {
    kind: GridKind,
    n: usize,
    rows: usize,
    extent: Extent,
    h: f64,
    h_row: f64,
    origin: C64,
    nodes: Vec<C64>,
    weights: Vec<f64>,
}

impl fmt::Debug for ComplexGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexGrid")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("rows", &self.rows)
            .field("extent", &self.extent)
            .finish()
    }
}

impl PartialEq for ComplexGrid {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.n == other.n && self.rows == other.rows && self.extent == other.extent
    }
}

pub fn make_grid(kind: GridKind, n: usize, extent: Extent) -> Result<Arc<ComplexGrid>> {
    if n < 8 {
        return Err(Error::InvalidGrid(format!("n = {n} is below the minimum of 8")));
    }
    let grid = match (kind, extent) {
        (GridKind::SquareLattice, Extent::Box { center, half_width }) => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("square lattices need a power-of-two n, got {n}")));
            }
            positive(half_width, "half width")?;
            let h = 2.0 * half_width / n as f64;
            let origin = C64::new(center[0] - half_width, center[1] - half_width);
            let mut nodes = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    nodes.push(origin + C64::new(h * (i as f64 + 0.5), h * (j as f64 + 0.5)));
                }
            }
            ComplexGrid {
                kind,
                n,
                rows: n,
                extent: Extent::Box { center, half_width },
                h,
                h_row: h,
                origin,
                weights: vec![h * h; n * n],
                nodes,
            }
        }
        (GridKind::PolarDisk, Extent::Disk { radius, n_theta }) => {
            positive(radius, "radius")?;
            let nt = n_theta.unwrap_or(n);
            if nt < 8 {
                return Err(Error::InvalidGrid(format!("n_theta = {nt} is below the minimum of 8")));
            }
            let dr = radius / n as f64;
            let dt = 2.0 * PI / nt as f64;
            let mut nodes = Vec::with_capacity(n * nt);
            let mut weights = Vec::with_capacity(n * nt);
            for i in 0..n {
                let r = dr * (i as f64 + 0.5);
                for j in 0..nt {
                    nodes.push(C64::from_polar(r, dt * j as f64));
                    weights.push(r * dr * dt);
                }
            }
            ComplexGrid {
                kind,
                n,
                rows: nt,
                extent: Extent::Disk { radius, n_theta },
                h: dr,
                h_row: dt,
                origin: C64::new(0.0, 0.0),
                nodes,
                weights,
            }
        }
        (GridKind::StripPeriodic, Extent::Strip { xi_min, xi_max, n_xi }) => {
            if !(xi_max > xi_min) || !xi_min.is_finite() || !xi_max.is_finite() {
                return Err(Error::InvalidGrid(format!("empty xi range [{xi_min}, {xi_max}]")));
            }
            let rows = n_xi.unwrap_or(n);
            if rows < 8 {
                return Err(Error::InvalidGrid(format!("n_xi = {rows} is below the minimum of 8")));
            }
            let dphi = 2.0 * PI / n as f64;
            let dxi = (xi_max - xi_min) / rows as f64;
            let origin = C64::new(xi_min, -PI);
            let mut nodes = Vec::with_capacity(n * rows);
            for i in 0..rows {
                for j in 0..n {
                    nodes.push(origin + C64::new(dxi * (i as f64 + 0.5), dphi * j as f64));
                }
            }
            ComplexGrid {
                kind,
                n,
                rows,
                extent: Extent::Strip { xi_min, xi_max, n_xi },
                h: dphi,
                h_row: dxi,
                origin,
                weights: vec![dxi * dphi; n * rows],
                nodes,
            }
        }
        (kind, extent) => {
            return Err(Error::InvalidGrid(format!("extent {extent:?} does not fit a {} grid", kind.name())));
        }
    };
    Ok(Arc::new(grid))
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("{what} must be positive, got {x}")))
    }
}

/// Square lattice centred at the origin covering [-half_width, half_width]^2.
pub fn square(n: usize, half_width: f64) -> Result<Arc<ComplexGrid>> {
    make_grid(GridKind::SquareLattice, n, Extent::square(half_width))
}

/// Periodic strip with `n_phi` points around the period and `n_xi` rows.
pub fn strip(n_phi: usize, n_xi: usize, xi_min: f64, xi_max: f64) -> Result<Arc<ComplexGrid>> {
    make_grid(GridKind::StripPeriodic, n_phi, Extent::Strip { xi_min, xi_max, n_xi: Some(n_xi) })
}

impl ComplexGrid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Points along the fast axis: x, the radial count, or phi.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points along the slow axis: y, the angular count, or xi.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn extent(&self) -> &Extent {
        &self.extent
    }

    /// Lattice spacing: h for square lattices, dr for polar grids, dphi for strips.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Spacing between rows: h, dtheta or dxi.
    pub fn row_spacing(&self) -> f64 {
        self.h_row
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, k: usize) -> C64 {
        self.nodes[k]
    }

    pub fn is_square(&self) -> bool {
        self.kind == GridKind::SquareLattice
    }

    pub fn is_strip(&self) -> bool {
        self.kind == GridKind::StripPeriodic
    }

    /// Lower-left corner of a square lattice or (xi_min, -pi) for a strip.
    pub fn origin(&self) -> C64 {
        self.origin
    }

    pub fn half_width(&self) -> Option<f64> {
        match self.extent {
            Extent::Box { half_width, .. } => Some(half_width),
            _ => None,
        }
    }

    pub fn xi_range(&self) -> Option<(f64, f64)> {
        match self.extent {
            Extent::Strip { xi_min, xi_max, .. } => Some((xi_min, xi_max)),
            _ => None,
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Fractional lattice coordinates of a point (square lattices and strips).
    pub fn lattice_coords(&self, z: C64) -> (f64, f64) {
        let d = z - self.origin;
        match self.kind {
            GridKind::StripPeriodic => (d.im / self.h, d.re / self.h_row - 0.5),
            _ => (d.re / self.h - 0.5, d.im / self.h_row - 0.5),
        }
    }

    /// Nearest node to `z` (square lattices).
    pub fn nearest(&self, z: C64) -> usize {
        let (u, v) = self.lattice_coords(z);
        let i = (u.round().max(0.0) as usize).min(self.n - 1);
        let j = (v.round().max(0.0) as usize).min(self.rows - 1);
        self.index(i, j)
    }

    /// Indicator of the open unit disk on the nodes.
    pub fn disk_mask(&self) -> Vec<bool> {
        self.nodes.iter().map(|z| z.norm() < 1.0).collect()
    }
}

/// Complex values attached to the nodes of a grid.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub grid: Arc<ComplexGrid>,
    pub values: Vec<C64>,
    pub label: String,
}

impl SampledField {
    pub fn new(grid: Arc<ComplexGrid>, values: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { index, z: grid.node(index) });
        }
        Ok(SampledField { grid, values, label: label.into() })
    }

    pub fn zeros(grid: &Arc<ComplexGrid>) -> Self {
        SampledField { grid: grid.clone(), values: vec![C64::new(0.0, 0.0); grid.len()], label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(C64, C64) -> C64) -> Self {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&z, &v)| f(z, v)).collect();
        SampledField { grid: self.grid.clone(), values, label: self.label.clone() }
    }

    pub fn zip_with(&self, other: &SampledField, f: impl Fn(C64, C64) -> C64) -> Self {
        debug_assert!(self.grid == other.grid);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        SampledField { grid: self.grid.clone(), values, label: self.label.clone() }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|_, v| c * v)
    }

    pub fn add(&self, other: &SampledField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SampledField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn conj(&self) -> Self {
        self.map(|_, v| v.conj())
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Plain quadrature L^2 norm over the whole grid.
    pub fn l2(&self) -> f64 {
        lp(self, 2.0)
    }

    pub fn masked(&self, mask: &[bool]) -> Self {
        let values = self.values.iter().zip(mask).map(|(&v, &m)| if m { v } else { C64::new(0.0, 0.0) }).collect();
        SampledField { grid: self.grid.clone(), values, label: self.label.clone() }
    }
}

/// values[i] = rule(node_i); strip grids additionally require the rule to be
/// 2*pi periodic in phi.
pub fn sample(rule: impl Fn(C64) -> C64, grid: &Arc<ComplexGrid>) -> Result<SampledField> {
    if grid.is_strip() {
        let (xi_min, xi_max) = grid.xi_range().expect("strip extent");
        let dxi = (xi_max - xi_min) / grid.rows() as f64;
        let mut worst = 0.0_f64;
        for i in 0..grid.rows() {
            let xi = xi_min + dxi * (i as f64 + 0.5);
            let a = rule(C64::new(xi, -PI));
            let b = rule(C64::new(xi, PI));
            worst = worst.max((a - b).norm());
        }
        if worst > 1e-10 {
            return Err(Error::NonPeriodic(worst));
        }
    }
    let values = grid.nodes().iter().map(|&z| rule(z)).collect();
    SampledField::new(grid.clone(), values, "")
}

/// Holomorphic or quasiconformal parameterization of a domain by the unit disk.
pub trait ParamMap: Send + Sync + fmt::Debug {
    /// Value and first Wirtinger derivatives at `z`.
    fn jet(&self, z: C64) -> Jet;

    /// Preimage of `w`, if the Newton iteration from `w` converges.
    fn invert(&self, w: C64) -> Option<C64> {
        let mut z = w;
        for _ in 0..60 {
            let j = self.jet(z);
            let r = j.f - w;
            if r.norm() < 1e-14 * (1.0 + w.norm()) {
                return Some(z);
            }
            let det = j.fz.norm_sqr() - j.fzbar.norm_sqr();
            if det.abs() < 1e-300 {
                return None;
            }
            let dz = (j.fz.conj() * r - j.fzbar * r.conj()) / det;
            z -= dz;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
        }
        let r = self.jet(z).f - w;
        (r.norm() < 1e-10 * (1.0 + w.norm())).then_some(z)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Jet {
    pub f: C64,
    pub fz: C64,
    pub fzbar: C64,
}

impl Jet {
    pub fn jacobian(&self) -> f64 {
        self.fz.norm_sqr() - self.fzbar.norm_sqr()
    }
}

/// Image of the unit disk under a parameterizing map, with a sampled
/// boundary curve for distance queries.
#[derive(Debug)]
pub struct Quasidisk {
    map: Arc<dyn ParamMap>,
    boundary: Vec<C64>,
}

impl Quasidisk {
    pub fn new(map: Arc<dyn ParamMap>, boundary_samples: usize) -> Self {
        let boundary = (0..boundary_samples)
            .map(|k| map.jet(C64::from_polar(1.0, 2.0 * PI * k as f64 / boundary_samples as f64)).f)
            .collect();
        Quasidisk { map, boundary }
    }

    pub fn map(&self) -> &Arc<dyn ParamMap> {
        &self.map
    }

    pub fn boundary(&self) -> &[C64] {
        &self.boundary
    }

    /// Distance from `w` to the sampled boundary polygon.
    pub fn boundary_distance(&self, w: C64) -> f64 {
        let m = self.boundary.len();
        let mut best = f64::INFINITY;
        for k in 0..m {
            let a = self.boundary[k];
            let b = self.boundary[(k + 1) % m];
            best = best.min(segment_distance(w, a, b));
        }
        best
    }
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// The domains on which operators and norms are defined. Fields on a
/// quasidisk are carried on a lattice over the parameter disk: node z stands
/// for the point g(z) with area element |g_z|^2 - |g_zbar|^2 times the lattice
/// weight.
#[derive(Clone, Debug)]
pub enum DomainGeometry {
    Plane,
    UnitDisk,
    Strip,
    Quasidisk(Arc<Quasidisk>),
}

impl DomainGeometry {
    pub fn name(&self) -> &'static str {
        match self {
            DomainGeometry::Plane => "plane",
            DomainGeometry::UnitDisk => "disk",
            DomainGeometry::Strip => "strip",
            DomainGeometry::Quasidisk(_) => "quasidisk",
        }
    }

    /// (point, area factor, boundary distance) for a node, or None when the
    /// node lies outside the domain. Plane and strip have distance 1.
    pub fn node_data(&self, z: C64) -> Option<(C64, f64, f64)> {
        match self {
            DomainGeometry::Plane | DomainGeometry::Strip => Some((z, 1.0, 1.0)),
            DomainGeometry::UnitDisk => {
                let r = z.norm();
                (r < 1.0).then_some((z, 1.0, 1.0 - r))
            }
            DomainGeometry::Quasidisk(q) => {
                if z.norm() >= 1.0 {
                    return None;
                }
                let jet = q.map.jet(z);
                Some((jet.f, jet.jacobian(), q.boundary_distance(jet.f)))
            }
        }
    }
}

/// Exponent p in [1, inf], weight power s >= 0 and the domain supplying the
/// boundary distance.
#[derive(Clone, Debug)]
pub struct WeightedNormSpec {
    pub p: f64,
    pub s: f64,
    pub geometry: DomainGeometry,
}

impl WeightedNormSpec {
    pub fn new(p: f64, s: f64, geometry: DomainGeometry) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("norm exponent p = {p} must be at least 1")));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("weight power s = {s} must be non-negative")));
        }
        Ok(WeightedNormSpec { p, s, geometry })
    }
}

/// (sum_i w_i |f_i d_i^s|^p)^(1/p), or the weighted max for p = inf.
pub fn weighted_norm(field: &SampledField, spec: &WeightedNormSpec) -> f64 {
    let grid = &field.grid;
    let mut terms = Vec::with_capacity(field.len());
    let mut max = 0.0_f64;
    for (k, (&z, &v)) in grid.nodes().iter().zip(&field.values).enumerate() {
        let Some((_, area, d)) = spec.geometry.node_data(z) else { continue };
        let a = if spec.s == 0.0 { v.norm() } else { v.norm() * d.powf(spec.s) };
        if spec.p.is_infinite() {
            max = max.max(a);
        } else {
            terms.push(grid.weights()[k] * area * a.powf(spec.p));
        }
    }
    if spec.p.is_infinite() {
        max
    } else {
        pairwise_sum(&terms).powf(1.0 / spec.p)
    }
}

/// Unweighted L^p norm over all nodes of the grid.
pub fn lp(field: &SampledField, p: f64) -> f64 {
    if p.is_infinite() {
        return field.sup();
    }
    let terms: Vec<f64> = field.values.iter().zip(field.grid.weights()).map(|(v, w)| w * v.norm().powf(p)).collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

/// L^p norm over the nodes selected by `mask`.
pub fn lp_masked(field: &SampledField, p: f64, mask: &[bool]) -> f64 {
    if p.is_infinite() {
        return field.values.iter().zip(mask).filter(|(_, &m)| m).fold(0.0, |a, (v, _)| a.max(v.norm()));
    }
    let terms: Vec<f64> = field
        .values
        .iter()
        .zip(field.grid.weights())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((v, w), _)| w * v.norm().powf(p))
        .collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

/// Tree reduction with a fixed shape, so the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

pub fn pairwise_sum_c(x: &[C64]) -> C64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum_c(&x[..mid]) + pairwise_sum_c(&x[mid..])
}

fn keys(t: f64) -> [f64; 4] {
    // Catmull-Rom weights for offsets -1, 0, 1, 2.
    let t2 = t * t;
    let t3 = t2 * t;
    [-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2]
}

/// Bicubic (Catmull-Rom) interpolation on a square lattice or strip; strips
/// wrap in phi, other axes clamp at the edge.
pub fn interp_bicubic(field: &SampledField, z: C64) -> C64 {
    let g = &field.grid;
    let (u, v) = g.lattice_coords(z);
    let (nu, nv) = (g.n() as isize, g.rows() as isize);
    let (iu, iv) = (u.floor(), v.floor());
    let (wu, wv) = (keys(u - iu), keys(v - iv));
    let (iu, iv) = (iu as isize, iv as isize);
    let periodic = g.is_strip();
    let mut acc = C64::new(0.0, 0.0);
    for (b, wb) in wv.iter().enumerate() {
        let j = (iv + b as isize - 1).clamp(0, nv - 1) as usize;
        let mut row = C64::new(0.0, 0.0);
        for (a, wa) in wu.iter().enumerate() {
            let i = iu + a as isize - 1;
            let i = if periodic { i.rem_euclid(nu) } else { i.clamp(0, nu - 1) } as usize;
            row += field.values[j * g.n() + i] * wa;
        }
        acc += row * wb;
    }
    acc
}

/// Bilinear interpolation with the same edge conventions as [`interp_bicubic`].
pub fn interp_bilinear(field: &SampledField, z: C64) -> C64 {
    let g = &field.grid;
    let (u, v) = g.lattice_coords(z);
    let (nu, nv) = (g.n() as isize, g.rows() as isize);
    let (iu, iv) = (u.floor(), v.floor());
    let (tu, tv) = (u - iu, v - iv);
    let (iu, iv) = (iu as isize, iv as isize);
    let periodic = g.is_strip();
    let at = |i: isize, j: isize| {
        let j = j.clamp(0, nv - 1) as usize;
        let i = if periodic { i.rem_euclid(nu) } else { i.clamp(0, nu - 1) } as usize;
        field.values[j * g.n() + i]
    };
    (at(iu, iv) * (1.0 - tu) + at(iu + 1, iv) * tu) * (1.0 - tv)
        + (at(iu, iv + 1) * (1.0 - tu) + at(iu + 1, iv + 1) * tu) * tv
}
