use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64 as C64;
use quasibel::grid::{self, sample};
use quasibel::qbf;
use quasibel::solver::{self, BeltramiCoefficient, SolverConfig};
use quasibel::transforms;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasibel"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["verify", "--bogus-flag"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "no-such-check"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--kind", "sideways", "--mu", "x.qbf"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_2() {
    let out = run(&["solve", "--kind", "principal", "--mu", "missing.qbf", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.qbf") && err.contains("No such file"), "{err}");
}

#[test]
fn verify_writes_reports() {
    let path = scratch("reports.jsonl");
    let out = run(&["verify", "--suite", "kz-norm,s-isometry", "--n", "64", "--seed", "3", "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(lines[0]["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(lines[1]["id"], "kz-norm");
    assert_eq!(lines[2]["id"], "s-isometry");
    for l in &lines[1..] {
        assert_eq!(l["pass"], true);
        assert_eq!(l["n"], 64);
    }
}

#[test]
fn failing_checks_exit_1() {
    // at n = 8 the interior has no room for the residual comparison
    let path = scratch("failing.jsonl");
    let out = run(&["verify", "--suite", "right-inverse", "--n", "8", "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let last = fs::read_to_string(&path).unwrap().lines().last().unwrap().to_string();
    let report: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn transform_matches_the_library() {
    let g = grid::square(32, 2.0).unwrap();
    let f = sample(|z| C64::new((-16.0 * z.norm_sqr()).exp(), 0.0), &g).unwrap();
    let input = scratch("bump.qbf");
    let output = scratch("bump-s.qbf");
    qbf::write_file(&input, &f, None).unwrap();
    let out = run(&["transform", "--op", "beurling", "--in", s(&input), "--out", s(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (back, prov) = qbf::read_file(&output).unwrap();
    assert!(prov.is_some());
    assert_eq!(back.values, transforms::beurling(&f).unwrap().values);
    let bad = run(&["transform", "--op", "beurling", "--m", "2", "--in", s(&input), "--out", s(&output)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn solve_principal_with_report() {
    let g = grid::square(32, 2.0).unwrap();
    let mu = sample(|z| C64::new(if z.norm() < 1.0 { 0.5 } else { 0.0 }, 0.0), &g).unwrap();
    let input = scratch("mu.qbf");
    let output = scratch("f.qbf");
    let report = scratch("report.json");
    qbf::write_file(&input, &mu, None).unwrap();
    let out = run(&["solve", "--kind", "principal", "--mu", s(&input), "--out", s(&output), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (f, _) = qbf::read_file(&output).unwrap();
    let lib = solver::principal_solution(&BeltramiCoefficient::from_field(mu, 0.5).unwrap(), &SolverConfig::default())
        .unwrap();
    assert_eq!(f.values, lib.f.values);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["kind"], "principal");
    assert!(r["iterations"].as_u64().unwrap() > 0);
    assert!(r["contraction_ratio"].as_f64().unwrap() < 1.0);
    assert!(r["provenance"]["config_hash"].is_string());
}

#[test]
fn render_grid_lines() {
    let g = grid::square(16, 1.0).unwrap();
    let id = sample(|z| z, &g).unwrap();
    let shear = sample(|z| z + 0.5 * z.conj(), &g).unwrap();
    let (a, b) = (scratch("id.qbf"), scratch("shear.qbf"));
    qbf::write_file(&a, &id, None).unwrap();
    qbf::write_file(&b, &shear, None).unwrap();
    let csv = scratch("lines.csv");

    let out = run(&["render", "--in", s(&a), "--mode", "grid", "--n", "4", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# quasibel "));
    let rows: Vec<Vec<String>> = text.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2 * 4 * 16);
    let mut fixed: std::collections::BTreeMap<String, (String, f64)> = Default::default();
    for r in &rows {
        let (x, y): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        let held = if r[1] == "x" { y } else { x };
        let e = fixed.entry(r[0].clone()).or_insert((r[1].clone(), held));
        assert_eq!(e.1, held);
    }
    assert_eq!(fixed.len(), 8);

    let out = run(&["render", "--in", s(&b), "--mode", "grid", "--n", "4", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    for l in text.lines().skip(2) {
        let r: Vec<&str> = l.split(',').collect();
        let (line, vertex): (usize, usize) = (r[0].parse().unwrap(), r[2].parse().unwrap());
        let (i, j) = if r[1] == "x" { (vertex, line * 4) } else { ((line - 4) * 4, vertex) };
        let z = g.node(g.index(i, j));
        let w = z + 0.5 * z.conj();
        let (x, y): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((x - w.re).abs() <= 1e-12 && (y - w.im).abs() <= 1e-12);
    }
}

#[test]
fn render_heat_maps() {
    let g = grid::square(8, 1.0).unwrap();
    let zero = sample(|_| C64::new(0.0, 0.0), &g).unwrap();
    let ramp = sample(|z| C64::new(z.re + 1.0, 0.0), &g).unwrap();
    let (a, b) = (scratch("zero.qbf"), scratch("ramp.qbf"));
    qbf::write_file(&a, &zero, None).unwrap();
    qbf::write_file(&b, &ramp, None).unwrap();
    let pgm = scratch("heat.pgm");

    assert_eq!(run(&["render", "--in", s(&a), "--mode", "heat", "--out", s(&pgm)]).status.code(), Some(0));
    let text = fs::read_to_string(&pgm).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert!(lines.next().unwrap().starts_with("# quasibel"));
    assert_eq!(lines.next(), Some("8 8"));
    assert_eq!(lines.next(), Some("255"));
    let pixels: Vec<u32> =
        lines.flat_map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect::<Vec<_>>()).collect();
    assert_eq!(pixels.len(), 64);
    assert!(pixels.iter().all(|&p| p == 0));

    for scale in ["linear", "log"] {
        assert_eq!(
            run(&["render", "--in", s(&b), "--mode", "heat", "--scale", scale, "--out", s(&pgm)]).status.code(),
            Some(0)
        );
        let first = fs::read_to_string(&pgm).unwrap();
        run(&["render", "--in", s(&b), "--mode", "heat", "--scale", scale, "--out", s(&pgm)]);
        assert_eq!(first, fs::read_to_string(&pgm).unwrap());
        let row: Vec<u32> = first.lines().nth(4).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*row.last().unwrap(), 255);
    }
}

#[test]
fn family_tables() {
    let spec = scratch("family.json");
    fs::write(
        &spec,
        r#"{"d": 0.25, "box": [[0, 1]], "param_growth": {"n": 2, "c": 1.0},
            "holder": {"n": 32, "t0": [0.5], "ladder": [0.2, 0.1, 0.05, 0.025], "probes": [[0, 0], [0.3, 0.1]]},
            "mollifier": {"b": 0.2, "beta": 1.0},
            "terms": [{"coef": [0.25, 0], "factors": [{"name": "edge", "power": 1}, {"name": "phase", "freq": 1, "power": 1}]}]}"#,
    )
    .unwrap();
    let csv = scratch("holder.csv");
    let out = run(&["family", "--cmd", "holder", "--spec", s(&spec), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# beta: ")));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 2);

    let out = run(&["family", "--cmd", "mollify", "--spec", s(&spec), "--n", "8", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("re_z,im_z,t0,"));
    assert!(text.lines().count() > 10);

    fs::write(&spec, "{").unwrap();
    assert_eq!(run(&["family", "--cmd", "holder", "--spec", s(&spec), "--out", s(&csv)]).status.code(), Some(2));
}

#[test]
fn provenance_tracks_the_configuration() {
    let g = grid::square(8, 1.0).unwrap();
    let f = sample(|z| C64::new((-40.0 * z.norm_sqr()).exp(), 0.0), &g).unwrap();
    let input = scratch("prov.qbf");
    qbf::write_file(&input, &f, None).unwrap();
    let hash = |extra: &[&str]| {
        let out = scratch("prov-out.qbf");
        let mut args = vec!["transform", "--op", "cauchy", "--in", s(&input), "--out", s(&out)];
        args.extend_from_slice(extra);
        assert_eq!(run(&args).status.code(), Some(0));
        qbf::read_file(&out).unwrap().1.unwrap().config_hash
    };
    assert_eq!(hash(&[]), hash(&[]));
    assert_ne!(hash(&[]), hash(&["--backend", "direct"]));
}
