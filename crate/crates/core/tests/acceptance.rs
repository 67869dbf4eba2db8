use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C64;
use quasibel::grid::{self, DomainGeometry};
use quasibel::moebius::ReflectionRule;
use quasibel::params::{holder_modulus, FamilySpec, HolderConfig, HolderExponent};
use quasibel::solver::{self, BeltramiCoefficient, ChainConfig, SolverConfig};
use quasibel::transforms::{Family, OperatorSpec};
use quasibel::verify::{
    decay_exponent_fit, derivative_bound_measurements, holder_test_family, log_deviations, operator_norm_estimate,
    right_inverse_residuals, run_suite, SuiteConfig, BOUNDS_SCHEDULE,
};
use quasibel::Result;

const SEED: u64 = 7;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn bump(z: C64) -> f64 {
    let q = z.norm_sqr();
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q)).exp()
    }
}

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn closed_form_principal() -> Outcome {
    let t0 = Instant::now();
    let g = grid::square(256, 2.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| real(if z.norm() < 1.0 { 0.5 } else { 0.0 }), &g, 0.5)?;
    let f = solver::principal_solution(&mu, &SolverConfig::default())?;
    let mut err = 0.0_f64;
    for (k, &z) in g.nodes().iter().enumerate() {
        if (z.norm() - 1.0).abs() <= 4.0 * h {
            continue;
        }
        let exact = if z.norm() < 1.0 { z + 0.5 * z.conj() } else { z + 0.5 / z };
        err = err.max((f.f.values[k] - exact).norm());
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((err <= 5.0 * h && secs <= 60.0, format!("sup error {err:.3e} (limit {:.3e}), {secs:.1} s", 5.0 * h)))
}

fn right_inverses() -> Outcome {
    let coarse = right_inverse_residuals(128)?;
    let fine = right_inverse_residuals(256)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, (a, b)) in ["C", "C_3", "P_H"].iter().zip(coarse.iter().zip(&fine)) {
        pass &= *b <= 1e-3 && a / b >= 3.0;
        parts.push(format!("{name} {b:.2e} (x{:.1})", a / b));
    }
    Ok((pass, parts.join(", ")))
}

fn calderon_zygmund() -> Outcome {
    let plane = grid::square(128, 2.0)?;
    let s = operator_norm_estimate(&OperatorSpec::plane(Family::Beurling)?, &plane, 2.0, 64, SEED)?;
    let strip = grid::strip(64, 256, -12.0, 2.0)?;
    let th = operator_norm_estimate(&OperatorSpec::strip(Family::StripBeurling)?, &strip, 2.0, 64, SEED)?;
    let disk = grid::square(128, 1.0)?;
    let s1 = operator_norm_estimate(&OperatorSpec::disk(Family::BeurlingM, 1)?, &disk, 2.0, 64, SEED)?;
    let band = 0.999..=1.001;
    let pass = band.contains(&s) && band.contains(&th) && s1 >= 1.0;
    Ok((pass, format!("S {s:.6}, T_H {th:.6}, S_1 {s1:.4}")))
}

fn normal_contract() -> Outcome {
    let g = grid::square(256, 1.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| if z.norm() < 1.0 { 0.2 * z / z.conj() } else { real(0.0) }, &g, 0.2)?;
    let f = solver::normal_solution(&mu)?;
    let (mut err, mut top) = (0.0_f64, 0.0_f64);
    for (k, &z) in g.nodes().iter().enumerate() {
        let r = z.norm();
        if r >= 1.0 {
            continue;
        }
        top = top.max(f.f.values[k].norm());
        if r <= 1.0 - 4.0 * h {
            err = err.max((f.f.values[k] - z * r.sqrt()).norm());
        }
    }
    let at0 = f.f.values[g.nearest(real(0.0))].norm();
    let at1 = (f.f.values[g.nearest(real(1.0 - h))] - 1.0).norm();
    let tol = 10.0 * h;
    let pass = err <= tol && at0 <= tol && at1 <= tol && top <= 1.0 + tol;
    Ok((
        pass,
        format!("sup error {err:.2e}, |f(0)| {at0:.1e}, |f(1) - 1| {at1:.2e}, max |f| {top:.4} (10h = {tol:.3e})"),
    ))
}

fn derivative_bounds() -> Outcome {
    let rows = derivative_bound_measurements(128, SEED)?;
    let pass = rows.iter().all(|(a, big_a, _)| *a > 0.0 && big_a.is_finite())
        && rows.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
    let text: Vec<String> =
        BOUNDS_SCHEDULE.iter().zip(&rows).map(|(d, (a, big_a, _))| format!("d={d}: [{a:.3}, {big_a:.3}]")).collect();
    Ok((pass, text.join(", ")))
}

fn log_scaling() -> Outcome {
    let [a, b] = log_deviations(128)?;
    let ratio = b / a;
    Ok(((2.0..=8.0).contains(&ratio), format!("deviations {a:.3e}, {b:.3e}, ratio {ratio:.3} (c^2 ratio 4)")))
}

fn chain_pipeline() -> Outcome {
    let t0 = Instant::now();
    let g = grid::square(128, 1.0)?;
    let h = g.spacing();
    let mu = BeltramiCoefficient::from_rule(|z| real(0.03 * (1.0 - z.norm_sqr()).max(0.0) * bump(z)), &g, 0.03)?;
    let chain = solver::derivative_chain_solve(
        &mu,
        &DomainGeometry::UnitDisk,
        Some(&ReflectionRule::disk()),
        &ChainConfig::new(1, 8),
    )?;
    let (map, disc) = solver::reconstruct_map(&chain, &mu, 1e-3)?;
    let margin = solver::chain_margin(&chain)?;
    let inj = solver::injectivity_sample(&map.f, &g.disk_mask(), 10_000, 10.0 * h, SEED);
    let secs = t0.elapsed().as_secs_f64();
    let res = chain.residuals[0];
    let pass =
        res <= 1e-3 && disc <= 1e-3 && margin <= 0.5 && inj.pairs == 10_000 && inj.violations == 0 && secs <= 300.0;
    Ok((
        pass,
        format!(
            "residual {res:.2e}, discrepancy {disc:.2e}, margin {margin:.3}, {} violations in {} pairs, {secs:.1} s",
            inj.violations, inj.pairs
        ),
    ))
}

fn holder() -> Outcome {
    let cfg = HolderConfig { t0: vec![0.5], ladder: vec![0.2, 0.1, 0.05, 0.025], ..HolderConfig::default() };
    let est = holder_modulus(&holder_test_family()?, &cfg)?;
    let flat = FamilySpec::new(|z: C64, _: &[f64]| 0.2 * z * bump(z), vec![(0.0, 1.0)], 0.2)?;
    let sat = holder_modulus(&flat, &cfg)?.beta == HolderExponent::Saturated;
    let r2 = est.min_r2.unwrap_or(0.0);
    let (pass, beta) = match est.beta {
        HolderExponent::Fitted(b) => (b > 0.0 && b <= 1.0 && r2 >= 0.9 && sat, format!("{b:.3}")),
        HolderExponent::Saturated => (false, "saturated".into()),
    };
    Ok((pass, format!("beta {beta}, min R^2 {r2:.4}, constant family saturated: {sat}")))
}

fn decay_fits() -> Outcome {
    let coarse = derivative_bound_measurements(128, SEED)?;
    let fine = derivative_bound_measurements(256, SEED)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, (a, b)) in BOUNDS_SCHEDULE.iter().zip(coarse.iter().zip(&fine)) {
        let fa = decay_exponent_fit(&a.2, &DomainGeometry::UnitDisk, None)?.alpha;
        let fb = decay_exponent_fit(&b.2, &DomainGeometry::UnitDisk, None)?.alpha;
        pass &= fa < 1.0 && fb < 1.0 && (fa - fb).abs() <= 0.1;
        parts.push(format!("d={d}: {fa:.3}/{fb:.3}"));
    }
    Ok((pass, parts.join(", ")))
}

fn full_suite() -> Outcome {
    let t0 = Instant::now();
    let cfg = SuiteConfig { seed: SEED, ..SuiteConfig::default() };
    let first = run_suite(&cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    let second = run_suite(&cfg)?;
    let same = first.len() == second.len() && first.iter().zip(&second).all(|(a, b)| a.body() == b.body());
    let failed: Vec<&str> = first.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    let pass = failed.is_empty() && same && secs <= 600.0;
    Ok((pass, format!("{} checks, failed {failed:?}, {secs:.1} s, identical bodies on rerun: {same}", first.len())))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form principal solution", closed_form_principal),
        ("right-inverse residuals", right_inverses),
        ("Calderon-Zygmund norms", calderon_zygmund),
        ("normal solution contract", normal_contract),
        ("derivative bounds along the schedule", derivative_bounds),
        ("logarithmic solution scaling", log_scaling),
        ("derivative chain pipeline", chain_pipeline),
        ("Holder dependence on the parameter", holder),
        ("decay-exponent fits", decay_fits),
        ("full verify suite", full_suite),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
