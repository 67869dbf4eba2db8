//! Disk automorphisms, affine ellipse maps and reflection across the boundary
//! of the disk or of a quasidisk.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, Jet, ParamMap};

/// phi_w(z) = (w - z) / (1 - z conj(w)), an involution of the disk sending w to 0.
#[derive(Clone, Copy, Debug)]
pub struct DiskAutomorphism {
    w: C64,
}

impl DiskAutomorphism {
    pub fn new(w: C64) -> Result<Self> {
        if w.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!("|w| = {} must be below 1", w.norm())));
        }
        Ok(DiskAutomorphism { w })
    }

    pub fn w(&self) -> C64 {
        self.w
    }
}

pub fn apply_moebius(aut: &DiskAutomorphism, z: C64) -> C64 {
    let den = C64::new(1.0, 0.0) - z * aut.w.conj();
    assert!(den.norm() > 0.0, "degenerate denominator at z = {z}");
    (aut.w - z) / den
}

/// z -> z + mu0 conj(z).
#[derive(Clone, Copy, Debug)]
pub struct AffineEllipseMap {
    mu0: C64,
}

impl AffineEllipseMap {
    pub fn new(mu0: C64) -> Result<Self> {
        if mu0.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!("|mu0| = {} must be below 1", mu0.norm())));
        }
        Ok(AffineEllipseMap { mu0 })
    }

    pub fn mu0(&self) -> C64 {
        self.mu0
    }
}

pub fn affine_forward(map: &AffineEllipseMap, z: C64) -> C64 {
    z + map.mu0 * z.conj()
}

pub fn affine_inverse(map: &AffineEllipseMap, z: C64) -> C64 {
    (z - map.mu0 * z.conj()) / (1.0 - map.mu0.norm_sqr())
}

impl ParamMap for AffineEllipseMap {
    fn jet(&self, z: C64) -> Jet {
        Jet { f: affine_forward(self, z), fz: C64::new(1.0, 0.0), fzbar: self.mu0 }
    }

    fn invert(&self, w: C64) -> Option<C64> {
        Some(affine_inverse(self, w))
    }
}

/// The identity parameterization of the disk.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMap;

impl ParamMap for IdentityMap {
    fn jet(&self, z: C64) -> Jet {
        Jet { f: z, fz: C64::new(1.0, 0.0), fzbar: C64::new(0.0, 0.0) }
    }

    fn invert(&self, w: C64) -> Option<C64> {
        Some(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionMode {
    DiskInversion,
    PullbackThroughMap,
}

#[derive(Clone, Debug)]
pub struct ReflectionRule {
    geometry: DomainGeometry,
    mode: ReflectionMode,
    map: Option<Arc<dyn ParamMap>>,
}

impl ReflectionRule {
    pub fn disk() -> Self {
        ReflectionRule { geometry: DomainGeometry::UnitDisk, mode: ReflectionMode::DiskInversion, map: None }
    }

    /// Reflection through the parameterizing map of a quasidisk geometry.
    pub fn pullback(geometry: DomainGeometry) -> Result<Self> {
        match &geometry {
            DomainGeometry::Quasidisk(q) => {
                let map = q.map().clone();
                Ok(ReflectionRule { geometry, mode: ReflectionMode::PullbackThroughMap, map: Some(map) })
            }
            other => Err(Error::InvalidArgument(format!(
                "pullback reflection needs a quasidisk geometry, got {}",
                other.name()
            ))),
        }
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geometry
    }

    pub fn mode(&self) -> ReflectionMode {
        self.mode
    }

    pub fn map(&self) -> Option<&Arc<dyn ParamMap>> {
        self.map.as_ref()
    }
}

/// Reflection of a point given through its preimage z in the parameter disk.
///
/// The exterior extension of the map is replaced by its first-order Taylor
/// push from z to the inverted point 1/conj(z); this is exact for affine maps
/// and reduces to 1/conj(w) for the identity.
pub fn reflect_preimage(map: &dyn ParamMap, z: C64) -> Result<C64> {
    let r = z.norm();
    if r >= 1.0 || r == 0.0 {
        return Err(Error::Reflection(map.jet(z).f));
    }
    let jet = map.jet(z);
    let step = z.conj().inv() - z;
    Ok(jet.f + jet.fz * step + jet.fzbar * step.conj())
}

pub fn reflect(rule: &ReflectionRule, w: C64) -> Result<C64> {
    match rule.mode {
        ReflectionMode::DiskInversion => {
            let r = w.norm();
            if r >= 1.0 || r == 0.0 {
                return Err(Error::Reflection(w));
            }
            Ok(w.conj().inv())
        }
        ReflectionMode::PullbackThroughMap => {
            let map = rule.map.as_ref().expect("pullback rule carries a map");
            let z = map.invert(w).ok_or(Error::Reflection(w))?;
            reflect_preimage(map.as_ref(), z)
        }
    }
}
