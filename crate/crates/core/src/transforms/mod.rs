//! Singular integral operators: Cauchy and Beurling transforms on the plane,
//! their counter-term versions on the disk and on quasidisks, and the strip
//! operators.

mod counter;
pub mod domain;
pub(crate) mod fft2;
pub mod plane;
mod strip;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, SampledField};
use crate::moebius::{ReflectionMode, ReflectionRule};
pub use plane::{Kernel, LATTICE_GAMMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cauchy,
    Beurling,
    CauchyM,
    BeurlingM,
    StripCauchy,
    StripBeurling,
    DomainCauchyM,
    DomainBeurlingM,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Cauchy,
        Family::Beurling,
        Family::CauchyM,
        Family::BeurlingM,
        Family::StripCauchy,
        Family::StripBeurling,
        Family::DomainCauchyM,
        Family::DomainBeurlingM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cauchy => "cauchy",
            Family::Beurling => "beurling",
            Family::CauchyM => "cauchy_m",
            Family::BeurlingM => "beurling_m",
            Family::StripCauchy => "strip_cauchy",
            Family::StripBeurling => "strip_beurling",
            Family::DomainCauchyM => "domain_cauchy_m",
            Family::DomainBeurlingM => "domain_beurling_m",
        }
    }

    pub fn kernel(self) -> Kernel {
        match self {
            Family::Cauchy | Family::CauchyM | Family::StripCauchy | Family::DomainCauchyM => Kernel::Cauchy,
            _ => Kernel::Beurling,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown operator family {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Fft,
    Direct,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft" => Ok(Backend::Fft),
            "direct" | "direct-quadrature" => Ok(Backend::Direct),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s:?}"))),
        }
    }
}

/// A fully specified operator: family, counter-term order, domain and backend.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    family: Family,
    m: usize,
    geometry: DomainGeometry,
    backend: Backend,
    reflection: Option<ReflectionRule>,
}

impl OperatorSpec {
    pub fn new(
        family: Family,
        m: usize,
        geometry: DomainGeometry,
        backend: Backend,
        reflection: Option<ReflectionRule>,
    ) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("{family}: {msg}")));
        match family {
            Family::Cauchy | Family::Beurling => {
                if m != 0 {
                    return bad("plain transforms have m = 0");
                }
                if !matches!(geometry, DomainGeometry::Plane) {
                    return bad("plain transforms act on the plane");
                }
            }
            Family::CauchyM | Family::BeurlingM => {
                if !matches!(geometry, DomainGeometry::UnitDisk) {
                    return bad("counter-term transforms act on the unit disk");
                }
            }
            Family::StripCauchy | Family::StripBeurling => {
                if !matches!(geometry, DomainGeometry::Strip) {
                    return bad("strip families need strip geometry");
                }
            }
            Family::DomainCauchyM | Family::DomainBeurlingM => {
                let Some(rule) = &reflection else { return bad("domain families need a reflection rule") };
                match (&geometry, rule.mode()) {
                    (DomainGeometry::UnitDisk, ReflectionMode::DiskInversion) => {}
                    (DomainGeometry::Quasidisk(_), ReflectionMode::PullbackThroughMap) => {}
                    _ => return bad("reflection rule does not match the geometry"),
                }
            }
        }
        Ok(OperatorSpec { family, m, geometry, backend, reflection })
    }

    pub fn plane(family: Family) -> Result<Self> {
        OperatorSpec::new(family, 0, DomainGeometry::Plane, Backend::Fft, None)
    }

    pub fn disk(family: Family, m: usize) -> Result<Self> {
        OperatorSpec::new(family, m, DomainGeometry::UnitDisk, Backend::Fft, None)
    }

    pub fn strip(family: Family) -> Result<Self> {
        OperatorSpec::new(family, 0, DomainGeometry::Strip, Backend::Fft, None)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geometry
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn apply(&self, field: &SampledField) -> Result<SampledField> {
        let kernel = self.family.kernel();
        match self.family {
            Family::Cauchy | Family::Beurling => plane_apply(field, kernel, self.backend),
            Family::CauchyM | Family::BeurlingM => disk_apply(field, self.m, kernel, self.backend),
            Family::StripCauchy | Family::StripBeurling => strip_apply(field, kernel, self.backend),
            Family::DomainCauchyM | Family::DomainBeurlingM => {
                let rule = self.reflection.as_ref().expect("validated at construction");
                domain_apply(field, &self.geometry, rule, self.m, kernel)
            }
        }
    }
}

fn require_square(field: &SampledField) -> Result<()> {
    if field.grid.is_square() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("expected a square lattice, got {}", field.grid.kind().name())))
    }
}

/// Largest |f| on the outermost ring of a square lattice.
fn outer_ring_max(field: &SampledField) -> f64 {
    let n = field.grid.n();
    let mut m = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                m = m.max(field.values[j * n + i].norm());
            }
        }
    }
    m
}

fn plane_apply(field: &SampledField, kernel: Kernel, backend: Backend) -> Result<SampledField> {
    require_square(field)?;
    let values = match backend {
        Backend::Fft => {
            // The lattice cannot tell whether data on its outer ring continues
            // past the box; the spectral result would silently drop it.
            let ring = outer_ring_max(field);
            if ring > 1e-12 * field.sup().max(f64::MIN_POSITIVE) && ring > 0.0 {
                return Err(Error::SupportAtBoundary(ring));
            }
            plane::spectral(field, kernel)
        }
        Backend::Direct => plane::lattice(field, kernel),
    };
    SampledField::new(field.grid.clone(), values, field.label.clone())
}

pub fn cauchy(field: &SampledField) -> Result<SampledField> {
    plane_apply(field, Kernel::Cauchy, Backend::Fft)
}

pub fn beurling(field: &SampledField) -> Result<SampledField> {
    plane_apply(field, Kernel::Beurling, Backend::Fft)
}

pub fn cauchy_with(field: &SampledField, backend: Backend) -> Result<SampledField> {
    plane_apply(field, Kernel::Cauchy, backend)
}

pub fn beurling_with(field: &SampledField, backend: Backend) -> Result<SampledField> {
    plane_apply(field, Kernel::Beurling, backend)
}

/// d/dz of the spectral Cauchy transform, differentiated on the padded lattice.
pub fn cauchy_dz_spectral(field: &SampledField) -> Result<SampledField> {
    require_square(field)?;
    SampledField::new(field.grid.clone(), plane::spectral_cauchy_dz(field), field.label.clone())
}

/// Disk nodes and the counter-term machinery for fields on a lattice over the disk.
pub(crate) struct DiskNodes {
    pub index: Vec<usize>,
    pub z: Vec<C64>,
}

impl DiskNodes {
    pub fn new(field: &SampledField) -> Self {
        let mut index = Vec::new();
        let mut z = Vec::new();
        for (k, &p) in field.grid.nodes().iter().enumerate() {
            if p.norm() < 1.0 {
                index.push(k);
                z.push(p);
            }
        }
        DiskNodes { index, z }
    }
}

fn check_disk_support(field: &SampledField) -> Result<()> {
    let sup = field.sup();
    for (z, v) in field.grid.nodes().iter().zip(&field.values) {
        if z.norm() >= 1.0 && v.norm() > 1e-12 * sup {
            return Err(Error::SupportOutsideDomain(format!("|f({z})| = {:e} outside the unit disk", v.norm())));
        }
    }
    Ok(())
}

/// Counter-term remainder at the disk nodes (targets default to all disk nodes).
pub(crate) fn disk_correction(
    field: &SampledField,
    nodes: &DiskNodes,
    m: usize,
    kernel: Kernel,
    targets: &[C64],
) -> Vec<C64> {
    let h = field.grid.spacing();
    let w = h * h / PI;
    let mut zs = Vec::new();
    let mut weighted = Vec::new();
    for (&k, &z) in nodes.index.iter().zip(&nodes.z) {
        let v = field.values[k];
        if v.re != 0.0 || v.im != 0.0 {
            zs.push(z);
            weighted.push(v * w);
        }
    }
    let beurling = kernel == Kernel::Beurling;
    let src = counter::disk_sources(&zs, &weighted, m, beurling);
    counter::counter_sum(&src, targets, if beurling { 2 } else { 1 })
}

fn disk_apply(field: &SampledField, m: usize, kernel: Kernel, backend: Backend) -> Result<SampledField> {
    require_square(field)?;
    check_disk_support(field)?;
    let plain = match backend {
        Backend::Fft => plane::spectral(field, kernel),
        Backend::Direct => plane::lattice(field, kernel),
    };
    let nodes = DiskNodes::new(field);
    let mut values = vec![C64::new(0.0, 0.0); field.len()];
    for &k in &nodes.index {
        values[k] = plain[k];
    }
    if m > 0 {
        let corr = disk_correction(field, &nodes, m, kernel, &nodes.z);
        for (&k, c) in nodes.index.iter().zip(corr) {
            values[k] += c;
        }
    }
    SampledField::new(field.grid.clone(), values, field.label.clone())
}

pub fn cauchy_m(field: &SampledField, m: usize) -> Result<SampledField> {
    disk_apply(field, m, Kernel::Cauchy, Backend::Fft)
}

pub fn beurling_m(field: &SampledField, m: usize) -> Result<SampledField> {
    disk_apply(field, m, Kernel::Beurling, Backend::Fft)
}

pub fn counter_m_with(field: &SampledField, m: usize, kernel: Kernel, backend: Backend) -> Result<SampledField> {
    disk_apply(field, m, kernel, backend)
}

/// Counter-term transform of a disk-supported field evaluated at arbitrary
/// points of the open disk. The plain part is read off the spectral result at
/// the nearest lattice node, so the points should be lattice nodes.
pub fn counter_m_at_nodes(field: &SampledField, m: usize, kernel: Kernel, nodes_idx: &[usize]) -> Result<Vec<C64>> {
    require_square(field)?;
    check_disk_support(field)?;
    let plain = plane::spectral(field, kernel);
    let targets: Vec<C64> = nodes_idx.iter().map(|&k| field.grid.node(k)).collect();
    let mut out: Vec<C64> = nodes_idx.iter().map(|&k| plain[k]).collect();
    if m > 0 {
        let nodes = DiskNodes::new(field);
        for (o, c) in out.iter_mut().zip(disk_correction(field, &nodes, m, kernel, &targets)) {
            *o += c;
        }
    }
    Ok(out)
}

fn strip_apply(field: &SampledField, kernel: Kernel, backend: Backend) -> Result<SampledField> {
    if !field.grid.is_strip() {
        return Err(Error::InvalidArgument(format!("expected a strip grid, got {}", field.grid.kind().name())));
    }
    let (p, t) = strip::strip_pair(field, backend, kernel == Kernel::Cauchy, kernel == Kernel::Beurling);
    let values = p.or(t).expect("one output requested");
    SampledField::new(field.grid.clone(), values, field.label.clone())
}

pub fn strip_cauchy(field: &SampledField) -> Result<SampledField> {
    strip_apply(field, Kernel::Cauchy, Backend::Fft)
}

pub fn strip_beurling(field: &SampledField) -> Result<SampledField> {
    strip_apply(field, Kernel::Beurling, Backend::Fft)
}

pub fn strip_with(field: &SampledField, kernel: Kernel, backend: Backend) -> Result<SampledField> {
    strip_apply(field, kernel, backend)
}

/// Both strip operators from one pass.
pub fn strip_both(field: &SampledField) -> Result<(SampledField, SampledField)> {
    if !field.grid.is_strip() {
        return Err(Error::InvalidArgument("expected a strip grid".into()));
    }
    let (p, t) = strip::strip_pair(field, Backend::Fft, true, true);
    Ok((
        SampledField::new(field.grid.clone(), p.expect("requested"), field.label.clone())?,
        SampledField::new(field.grid.clone(), t.expect("requested"), field.label.clone())?,
    ))
}

fn domain_apply(
    field: &SampledField,
    geometry: &DomainGeometry,
    rule: &ReflectionRule,
    m: usize,
    kernel: Kernel,
) -> Result<SampledField> {
    match (geometry, rule.mode()) {
        (DomainGeometry::UnitDisk, ReflectionMode::DiskInversion) => disk_apply(field, m, kernel, Backend::Fft),
        (DomainGeometry::Quasidisk(q), ReflectionMode::PullbackThroughMap) => {
            check_disk_support(field)?;
            domain::apply(field, q, m, kernel)
        }
        _ => Err(Error::InvalidArgument("reflection rule does not match the geometry".into())),
    }
}

pub fn domain_cauchy_m(
    field: &SampledField,
    geometry: &DomainGeometry,
    rule: &ReflectionRule,
    m: usize,
) -> Result<SampledField> {
    domain_apply(field, geometry, rule, m, Kernel::Cauchy)
}

pub fn domain_beurling_m(
    field: &SampledField,
    geometry: &DomainGeometry,
    rule: &ReflectionRule,
    m: usize,
) -> Result<SampledField> {
    domain_apply(field, geometry, rule, m, Kernel::Beurling)
}
