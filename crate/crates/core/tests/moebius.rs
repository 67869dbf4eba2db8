use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use quasibel::grid::{DomainGeometry, Quasidisk};
use quasibel::moebius::{
    affine_forward, affine_inverse, apply_moebius, reflect, AffineEllipseMap, DiskAutomorphism, IdentityMap,
    ReflectionRule,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn automorphism_sends_w_to_zero() {
    let a = DiskAutomorphism::new(c(0.5, 0.0)).unwrap();
    assert_eq!(apply_moebius(&a, c(0.5, 0.0)), c(0.0, 0.0));
    for theta in [0.0, std::f64::consts::FRAC_PI_3, std::f64::consts::PI] {
        let v = apply_moebius(&a, C64::from_polar(1.0, theta));
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }
    assert!(DiskAutomorphism::new(c(0.6, 0.8)).is_err());
}

#[test]
fn automorphism_is_an_involution_on_a_lattice() {
    let a = DiskAutomorphism::new(c(0.3, 0.4)).unwrap();
    for i in 0..32 {
        for j in 0..32 {
            let z = c(-1.0 + (i as f64 + 0.5) / 16.0, -1.0 + (j as f64 + 0.5) / 16.0);
            if z.norm() > 1.0 {
                continue;
            }
            assert!((apply_moebius(&a, apply_moebius(&a, z)) - z).norm() <= 1e-12);
        }
    }
}

#[test]
fn affine_maps() {
    let id = AffineEllipseMap::new(c(0.0, 0.0)).unwrap();
    assert_eq!(affine_forward(&id, c(0.3, 0.7)), c(0.3, 0.7));
    assert_eq!(affine_inverse(&id, c(0.3, 0.7)), c(0.3, 0.7));
    let m = AffineEllipseMap::new(c(0.5, 0.0)).unwrap();
    assert_eq!(affine_forward(&m, c(1.0, 0.0)), c(1.5, 0.0));
    assert!((affine_inverse(&m, c(1.5, 0.0)) - 1.0).norm() < 1e-15);
    assert!((affine_forward(&m, c(0.0, 1.0)) - c(0.0, 0.5)).norm() < 1e-15);
    assert!(AffineEllipseMap::new(c(1.0, 0.0)).is_err());
}

#[test]
fn disk_reflection() {
    let r = ReflectionRule::disk();
    assert!((reflect(&r, c(0.5, 0.0)).unwrap() - 2.0).norm() < 1e-15);
    assert!((reflect(&r, c(0.0, 0.5)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
    assert!(reflect(&r, c(1.0, 0.0)).is_err());
    assert!(reflect(&r, c(0.0, 1.5)).is_err());
}

#[test]
fn pullback_through_identity_is_inversion() {
    let q = Quasidisk::new(Arc::new(IdentityMap), 256);
    let rule = ReflectionRule::pullback(DomainGeometry::Quasidisk(Arc::new(q))).unwrap();
    let disk = ReflectionRule::disk();
    for k in 0..50 {
        let w = C64::from_polar(0.02 * k as f64 + 0.01, 0.7 * k as f64);
        assert!((reflect(&rule, w).unwrap() - reflect(&disk, w).unwrap()).norm() < 1e-12);
    }
    assert!(ReflectionRule::pullback(DomainGeometry::UnitDisk).is_err());
}

#[test]
fn reflection_sandwich_for_an_ellipse() {
    let map = AffineEllipseMap::new(c(0.3, 0.1)).unwrap();
    let q = Quasidisk::new(Arc::new(map), 256);
    let rule = ReflectionRule::pullback(DomainGeometry::Quasidisk(Arc::new(q))).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for k in 0..200 {
        let z = C64::from_polar(0.95 * (k as f64 + 0.5) / 200.0, 2.4 * k as f64);
        let w = affine_forward(&map, z);
        let r = (w - reflect(&rule, w).unwrap()).norm() / (1.0 - z.norm_sqr());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    assert!(lo > 0.0 && hi.is_finite());
    // |z - 1/conj(z)| = (1 - |z|^2) / |z| and the map is bi-Lipschitz
    assert!(lo >= (1.0 - 0.32) * 0.95_f64.recip() * 0.9);
}

proptest! {
    #[test]
    fn two_point_identity(wr in 0.0..0.99_f64, wt in 0.0..6.3_f64, zr in 0.0..1.0_f64, zt in 0.0..6.3_f64) {
        let w = C64::from_polar(wr, wt);
        let z = C64::from_polar(zr, zt);
        let lhs = (1.0 - w.conj() * z).norm_sqr() - (w - z).norm_sqr();
        let rhs = (1.0 - wr * wr) * (1.0 - zr * zr);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        // a + b <= (1 + |w|)(1 + |z|), so the gap is at least (1 - |w|)(1 - |z|)
        let (a, b) = ((1.0 - w.conj() * z).norm(), (w - z).norm());
        prop_assert!(a - b >= (1.0 - wr) * (1.0 - zr) - 1e-12);
        if a + b <= 2.0 {
            prop_assert!(a - b >= rhs / 2.0 - 1e-12);
        }
    }

    #[test]
    fn affine_round_trip(re in -0.9..0.9_f64, im in -0.4..0.4_f64, x in -3.0..3.0_f64, y in -3.0..3.0_f64) {
        prop_assume!(C64::new(re, im).norm() < 0.95);
        let m = AffineEllipseMap::new(C64::new(re, im)).unwrap();
        let z = C64::new(x, y);
        prop_assert!((affine_inverse(&m, affine_forward(&m, z)) - z).norm() <= 1e-12 * (1.0 + z.norm()) / (1.0 - m.mu0().norm()));
    }
}
