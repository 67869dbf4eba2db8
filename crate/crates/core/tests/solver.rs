use std::time::Instant;

use num_complex::Complex64 as C64;
use quasibel::grid::{self, sample, DomainGeometry, SampledField};
use quasibel::moebius::ReflectionRule;
use quasibel::solver::{self, BeltramiCoefficient, ChainConfig, SolverConfig};
use quasibel::transforms;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn bump(z: C64, r: f64) -> f64 {
    let t = z.norm_sqr() / (r * r);
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t)).exp()
    }
}

#[test]
fn zero_coefficient_gives_identity() {
    let g = grid::square(64, 2.0).unwrap();
    let mu = BeltramiCoefficient::from_field(SampledField::zeros(&g), 0.0).unwrap();
    let f = solver::principal_solution(&mu, &SolverConfig::default()).unwrap();
    for (z, v) in g.nodes().iter().zip(&f.f.values) {
        assert!((z - v).norm() < 1e-14);
    }
    assert_eq!(f.diagnostics.residual, 0.0);
}

#[test]
fn inhomogeneous_with_zero_mu_is_cauchy_transform() {
    let g = grid::square(64, 2.0).unwrap();
    let mu = BeltramiCoefficient::from_field(SampledField::zeros(&g), 0.0).unwrap();
    let phi = sample(|z| c(bump(z, 0.8), 0.0), &g).unwrap();
    let sigma = solver::solve_inhomogeneous(&mu, &phi).unwrap();
    let direct = transforms::cauchy(&phi).unwrap();
    assert!(sigma.sub(&direct).sup() < 1e-14);
}

#[test]
fn principal_solution_of_disk_indicator() {
    let t0 = Instant::now();
    let g = grid::square(256, 2.0).unwrap();
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| c(if z.norm() < 1.0 { 0.5 } else { 0.0 }, 0.0), &g, 0.5).unwrap();
    let f = solver::principal_solution(&mu, &SolverConfig::default()).unwrap();
    let mut err = 0.0_f64;
    for (z, v) in g.nodes().iter().zip(&f.f.values) {
        if (z.norm() - 1.0).abs() <= 4.0 * h {
            continue;
        }
        let exact = if z.norm() < 1.0 { z + 0.5 * z.conj() } else { z + 0.5 / z };
        err = err.max((v - exact).norm());
    }
    assert!(err <= 5.0 * h, "{err}");
    assert!(t0.elapsed().as_secs() < 60);
    // orientation
    for (a, b) in f.fz.values.iter().zip(&f.fzbar.values) {
        assert!(a.norm_sqr() - b.norm_sqr() > 0.0);
    }
    assert!(f.diagnostics.contraction_ratio <= 0.5 + 0.1, "{}", f.diagnostics.contraction_ratio);
}

#[test]
fn inhomogeneous_matches_closed_form_and_decays() {
    let g = grid::square(128, 2.0).unwrap();
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| c(if z.norm() < 1.0 { 0.5 } else { 0.0 }, 0.0), &g, 0.5).unwrap();
    let sigma = solver::solve_inhomogeneous(&mu, mu.field()).unwrap();
    let mut err = 0.0_f64;
    let mut ring = 0.0_f64;
    let n = g.n();
    for (k, z) in g.nodes().iter().enumerate() {
        let (i, j) = (k % n, k / n);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            ring = ring.max(sigma.values[k].norm() * z.norm());
        }
        if (z.norm() - 1.0).abs() <= 4.0 * h {
            continue;
        }
        let exact = if z.norm() < 1.0 { 0.5 * z.conj() } else { 0.5 / z };
        err = err.max((sigma.values[k] - exact).norm());
    }
    assert!(err <= 5.0 * h, "{err}");
    assert!((ring - 0.5).abs() < 0.05, "{ring}");
}

#[test]
fn exponential_form_has_nonvanishing_derivative() {
    let g = grid::square(128, 2.0).unwrap();
    let mu = BeltramiCoefficient::from_rule(|z| c(0.4 * bump(z, 0.9), 0.1 * bump(z - 0.2, 0.5)), &g, 0.5).unwrap();
    let a = solver::principal_solution_exponential(&mu, &SolverConfig::default()).unwrap();
    let b = solver::principal_solution(&mu, &SolverConfig::default()).unwrap();
    assert!(a.fz.values.iter().all(|v| v.norm() > 0.0));
    assert!(a.f.sub(&b.f).sup() < 1e-3, "{}", a.f.sub(&b.f).sup());
    assert!(a.diagnostics.residual < 1e-3, "{}", a.diagnostics.residual);
}

#[test]
fn normal_solution_of_radial_stretch() {
    let t0 = Instant::now();
    let g = grid::square(256, 1.0).unwrap();
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| if z.norm() < 1.0 { 0.2 * z / z.conj() } else { c(0.0, 0.0) }, &g, 0.2)
        .unwrap();
    let f = solver::normal_solution(&mu).unwrap();
    let mut err = 0.0_f64;
    let mut top = 0.0_f64;
    for (z, v) in g.nodes().iter().zip(&f.f.values) {
        if z.norm() < 1.0 {
            top = top.max(v.norm());
            if z.norm() <= 1.0 - 4.0 * h {
                err = err.max((v - z * z.norm().sqrt()).norm());
            }
        }
    }
    let zero = f.f.values[g.nearest(c(0.0, 0.0))];
    let one = f.f.values[g.nearest(c(1.0 - h, 0.0))];
    eprintln!("err {err:e} top {top} zero {zero} one {one} residual {:e} t {:?}", f.diagnostics.residual, t0.elapsed());
    assert!(err <= 10.0 * h, "{err}");
    assert!(zero.norm() <= 10.0 * h);
    assert!((one - 1.0).norm() <= 10.0 * h);
    assert!(top <= 1.0 + 10.0 * h);
}

#[test]
fn normal_solution_of_zero_is_identity() {
    let g = grid::square(64, 1.0).unwrap();
    let mu = BeltramiCoefficient::from_field(SampledField::zeros(&g), 0.0).unwrap();
    let f = solver::normal_solution(&mu).unwrap();
    for (z, v) in g.nodes().iter().zip(&f.f.values) {
        if z.norm() < 1.0 {
            assert!((z - v).norm() < 1e-10, "{z} {v}");
        }
    }
}

#[test]
fn normal_solution_of_oscillating_coefficient() {
    let g = grid::square(128, 1.0).unwrap();
    let h = g.spacing();
    let d = 0.3;
    let mu = BeltramiCoefficient::from_rule(
        move |z| if z.norm() < 1.0 { C64::from_polar(d, -(1.0 - z.norm()).ln()) } else { c(0.0, 0.0) },
        &g,
        d,
    )
    .unwrap();
    let t0 = Instant::now();
    let f = solver::normal_solution(&mu).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut top = 0.0_f64;
    let mut rim = f64::INFINITY;
    for (k, z) in g.nodes().iter().enumerate() {
        let r = z.norm();
        if r <= 0.9 {
            lo = lo.min(f.fz.values[k].norm());
            hi = hi.max(f.fz.values[k].norm());
        }
        if r < 1.0 {
            top = top.max(f.f.values[k].norm());
            if r > 1.0 - 2.0 * h {
                rim = rim.min(f.f.values[k].norm());
            }
        }
    }
    eprintln!("a {lo} A {hi} top {top} rim {rim} residual {:e} t {:?}", f.diagnostics.residual, t0.elapsed());
    assert!(lo > 0.0 && hi.is_finite());
    assert!(top <= 1.0 + 10.0 * h && rim >= 1.0 - 10.0 * h);
    assert!(f.diagnostics.residual < 1e-2, "{}", f.diagnostics.residual);
}

fn smooth_step(x: f64) -> f64 {
    let a = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    a(-x) / (a(-x) + a(1.0 + x))
}

#[test]
fn log_solution_deviation() {
    let g = grid::strip(64, 256, -12.0, 2.0).unwrap();
    let mut dev = Vec::new();
    for cc in [0.1, 0.2] {
        let nu = BeltramiCoefficient::from_rule(move |z| c(cc * z.re.exp() * smooth_step(z.re), 0.0), &g, cc).unwrap();
        let s = solver::principal_log_solution(&nu, &SolverConfig::default()).unwrap();
        assert!(s.mapping.diagnostics.residual < 1e-9);
        dev.push(s.deviation);
    }
    let ratio = dev[1] / dev[0];
    eprintln!("deviations {dev:?} ratio {ratio}");
    assert!((2.0..=8.0).contains(&ratio), "{ratio}");
}

#[test]
fn chain_on_disk() {
    let t0 = Instant::now();
    let g = grid::square(128, 1.0).unwrap();
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| c(0.03 * (1.0 - z.norm_sqr()).max(0.0) * bump(z, 1.0), 0.0), &g, 0.03)
        .unwrap();
    let rule = ReflectionRule::disk();
    let chain =
        solver::derivative_chain_solve(&mu, &DomainGeometry::UnitDisk, Some(&rule), &ChainConfig::new(1, 8)).unwrap();
    eprintln!(
        "chain {:?} residuals {:?} ratios {:?} b {} t {:?}",
        chain.iterations,
        chain.residuals,
        chain.ratios,
        chain.measured_b,
        t0.elapsed()
    );
    assert!(chain.residuals[0] <= 1e-3);
    let (map, disc) = solver::reconstruct_map(&chain, &mu, 1e-3).unwrap();
    let margin = solver::chain_margin(&chain).unwrap();
    let mask: Vec<bool> = g.nodes().iter().map(|z| z.norm() < 1.0).collect();
    let inj = solver::injectivity_sample(&map.f, &mask, 10_000, 10.0 * h, 7);
    eprintln!("disc {disc:e} margin {margin} residual {:e} inj {inj:?} t {:?}", map.diagnostics.residual, t0.elapsed());
    assert!(disc <= 1e-3);
    assert!(margin <= 0.5);
    assert!(map.diagnostics.residual <= 1e-3);
    assert_eq!(inj.violations, 0);
    assert!(t0.elapsed().as_secs() < 300);
}

#[test]
fn univalence_examples() {
    let g = grid::square(128, 1.0).unwrap();
    let h = g.spacing();
    let zero = solver::univalence_margin(&sample(|z| z, &g).unwrap().masked(&g.disk_mask()), &DomainGeometry::UnitDisk)
        .unwrap();
    assert!(zero < 1e-10, "{zero}");
    let quad = sample(|z| z + 0.1 * z * z, &g).unwrap();
    let m = solver::univalence_margin(&quad, &DomainGeometry::UnitDisk).unwrap();
    assert!(m <= 0.25 + 5.0 * h, "{m}");
    let koebe = solver::univalence_margin_from(
        |z| (1.0 + z) / (1.0 - z).powi(3),
        |z| (2.0 * z + 4.0) / (1.0 - z).powi(4),
        &g,
        &DomainGeometry::UnitDisk,
    )
    .unwrap();
    assert!(koebe > 1.0, "{koebe}");
}
