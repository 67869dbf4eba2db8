use num_complex::Complex64 as C64;
use quasibel::grid::{
    self, make_grid, sample, weighted_norm, DomainGeometry, Extent, GridKind, SampledField, WeightedNormSpec,
};
use quasibel::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn small_square_lattice() {
    let g = make_grid(GridKind::SquareLattice, 8, Extent::square(1.0)).unwrap();
    assert_eq!(g.len(), 64);
    assert!(g.weights().iter().all(|&w| w == 0.0625));
    assert!(g.nodes().iter().all(|z| z.re.abs() < 1.0 && z.im.abs() < 1.0));
    let area: f64 = g.weights().iter().sum();
    assert!((area - 4.0).abs() < 4e-10);
}

#[test]
fn strip_grid_is_periodic() {
    let g = make_grid(GridKind::StripPeriodic, 16, Extent::strip(-4.0, 1.0)).unwrap();
    assert_eq!(g.len(), 256);
    assert!((g.spacing() - 2.0 * std::f64::consts::PI / 16.0).abs() < 1e-15);
    let phis: Vec<f64> = g.nodes()[..16].iter().map(|z| z.im).collect();
    assert_eq!(phis[0], -std::f64::consts::PI);
    assert!(phis.iter().all(|&p| p < std::f64::consts::PI));
}

#[test]
fn bad_grids_are_rejected() {
    assert!(matches!(make_grid(GridKind::SquareLattice, 7, Extent::square(1.0)), Err(Error::InvalidGrid(_))));
    assert!(matches!(grid::square(96, 1.0), Err(Error::InvalidGrid(_))));
    assert!(matches!(grid::square(64, 0.0), Err(Error::InvalidGrid(_))));
    assert!(matches!(grid::square(64, -1.0), Err(Error::InvalidGrid(_))));
    assert!(make_grid(GridKind::StripPeriodic, 16, Extent::square(1.0)).is_err());
}

#[test]
fn polar_weights_sum_to_area() {
    let g = make_grid(GridKind::PolarDisk, 64, Extent::Disk { radius: 1.0, n_theta: None }).unwrap();
    let area: f64 = g.weights().iter().sum();
    assert!((area - std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn sampling_rules() {
    let g = grid::square(8, 1.0).unwrap();
    let zero = sample(|_| c(0.0, 0.0), &g).unwrap();
    assert!(zero.values.iter().all(|v| *v == c(0.0, 0.0)));
    let id = sample(|z| z, &g).unwrap();
    assert_eq!(id.values, g.nodes());
    // shifted so that the node (1, 0) is on the unit circle
    let off = make_grid(GridKind::SquareLattice, 8, Extent::Box { center: [0.125, 0.125], half_width: 1.0 }).unwrap();
    assert!(off.nodes().contains(&c(1.0, 0.0)));
    assert!(matches!(sample(|z| c(1.0 / (1.0 - z.norm()), 0.0), &off), Err(Error::NonFinite { .. })));
}

#[test]
fn disk_norms() {
    let g = grid::square(256, 1.0).unwrap();
    let h = g.spacing();
    let one = sample(|_| c(1.0, 0.0), &g).unwrap();
    let l2 = weighted_norm(&one, &WeightedNormSpec::new(2.0, 0.0, DomainGeometry::UnitDisk).unwrap());
    assert!((l2 - std::f64::consts::PI.sqrt()).abs() < 2.0 * h, "{l2}");

    let grow = sample(|z| c(if z.norm() < 1.0 { 1.0 / (1.0 - z.norm()) } else { 0.0 }, 0.0), &g).unwrap();
    let sup = weighted_norm(&grow, &WeightedNormSpec::new(f64::INFINITY, 1.0, DomainGeometry::UnitDisk).unwrap());
    assert!((sup - 1.0).abs() < 1e-12);
}

#[test]
fn unweighted_norm_of_growing_field_diverges() {
    let mut last = 0.0;
    for n in [64, 128, 256] {
        let g = grid::square(n, 1.0).unwrap();
        let h = g.spacing();
        let f = sample(|z| c(if z.norm() < 1.0 { 1.0 / (1.0 - z.norm()) } else { 0.0 }, 0.0), &g).unwrap();
        let v = weighted_norm(&f, &WeightedNormSpec::new(2.0, 0.0, DomainGeometry::UnitDisk).unwrap());
        assert!(v >= (1.0 / h).ln().sqrt(), "n = {n}: {v}");
        assert!(v > last);
        last = v;
    }
}

#[test]
fn weighted_norm_properties() {
    let g = grid::square(64, 1.0).unwrap();
    let f = sample(|z| if z.norm() < 1.0 { z * z + c(0.3, -0.2) } else { c(0.0, 0.0) }, &g).unwrap();
    for p in [1.0, 2.0, 4.0, f64::INFINITY] {
        let spec = WeightedNormSpec::new(p, 1.0, DomainGeometry::UnitDisk).unwrap();
        let a = weighted_norm(&f, &spec);
        let k = c(-2.0, 1.5);
        let b = weighted_norm(&f.scale(k), &spec);
        assert!((b - k.norm() * a).abs() <= 1e-12 * b);
        let s2 = weighted_norm(&f, &WeightedNormSpec::new(p, 2.0, DomainGeometry::UnitDisk).unwrap());
        assert!(s2 <= a);
    }
    assert!(WeightedNormSpec::new(0.5, 0.0, DomainGeometry::UnitDisk).is_err());
    assert!(WeightedNormSpec::new(2.0, -1.0, DomainGeometry::UnitDisk).is_err());
}

#[test]
fn norms_converge_under_refinement() {
    let norm = |n: usize| {
        let g = grid::square(n, 1.0).unwrap();
        let f =
            sample(|z| if z.norm() < 1.0 { c((1.0 - z.norm_sqr()).powi(2), 0.0) } else { c(0.0, 0.0) }, &g).unwrap();
        (g.spacing(), weighted_norm(&f, &WeightedNormSpec::new(2.0, 1.0, DomainGeometry::UnitDisk).unwrap()))
    };
    let (h, a) = norm(128);
    let (_, b) = norm(256);
    assert!((a - b).abs() <= h, "{a} {b}");
}

#[test]
fn fields_reject_bad_values() {
    let g = grid::square(8, 1.0).unwrap();
    assert!(SampledField::new(g.clone(), vec![c(0.0, 0.0); 10], "short").is_err());
    let mut v = vec![c(0.0, 0.0); 64];
    v[3] = c(f64::NAN, 0.0);
    assert!(matches!(SampledField::new(g, v, "nan"), Err(Error::NonFinite { index: 3, .. })));
}
