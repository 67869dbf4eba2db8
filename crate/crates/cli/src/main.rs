mod error;
mod render;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use quasibel::grid::{self, DomainGeometry, SampledField};
use quasibel::moebius::ReflectionRule;
use quasibel::params::{holder_modulus, mollify_family, FamilyFile, HolderExponent};
use quasibel::qbf::{self, Provenance};
use quasibel::solver::{self, BeltramiCoefficient, ChainConfig, SolverConfig};
use quasibel::transforms::{Backend, Family, OperatorSpec};
use quasibel::verify::{run_suite, SuiteConfig};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use error::{CliError, Result};
use render::{Mode, Scale};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "quasibel", version, about = "Beltrami equation solvers and singular integral transforms")]
struct Cli {
    /// Grid size, probe lattice or line count, depending on the verb.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Iteration tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Verb {
    /// Apply a transform to a QBF-1 field.
    Transform(TransformArgs),
    /// Solve a Beltrami equation for a sampled coefficient.
    Solve(SolveArgs),
    /// Holder table or mollified samples of a parameter family.
    Family(FamilyArgs),
    /// Run estimate checks and write JSON-lines reports.
    Verify(VerifyArgs),
    /// Draw a field as deformed gridlines (CSV) or a graymap.
    Render(RenderArgs),
}

#[derive(Debug, Args, Serialize)]
struct TransformArgs {
    /// cauchy, beurling, cauchy_m, beurling_m, strip_cauchy, strip_beurling, domain_cauchy_m, domain_beurling_m
    #[arg(long)]
    op: String,
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "fft")]
    backend: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Principal,
    Normal,
    Log,
    Chain,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    mu: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FamilyCmd {
    Holder,
    Mollify,
}

#[derive(Debug, Args, Serialize)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    cmd: FamilyCmd,
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// "all" or a comma-separated list of check ids.
    #[arg(long, default_value = "all")]
    suite: String,
}

#[derive(Debug, Args, Serialize)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, value_enum, default_value = "linear")]
    scale: Scale,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quasibel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn provenance(cli: &Cli) -> Provenance {
    let config = serde_json::to_vec(cli).expect("arguments serialize");
    let digest = Sha256::digest(&config);
    let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Provenance { version: VERSION.into(), config_hash }
}

fn header_line(p: &Provenance) -> String {
    format!("quasibel {} config {}", p.version, p.config_hash)
}

fn run(cli: &Cli) -> Result<()> {
    let prov = provenance(cli);
    match &cli.verb {
        Verb::Transform(a) => transform(cli, a, &prov),
        Verb::Solve(a) => solve(cli, a, &prov),
        Verb::Family(a) => family(cli, a, &prov),
        Verb::Verify(a) => verify(cli, a, &prov),
        Verb::Render(a) => render(cli, a, &prov),
    }
}

fn out_path(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().ok_or_else(|| CliError::Usage("--out is required for this verb".into()))
}

fn read_field(path: &Path) -> Result<SampledField> {
    qbf::read_file(path).map(|(f, _)| f).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn write_field(path: &Path, field: &SampledField, prov: &Provenance) -> Result<()> {
    qbf::write_file(path, field, Some(prov)).map_err(|e| match e {
        quasibel::Error::Io(source) => CliError::Output { path: path.to_path_buf(), source },
        other => other.into(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn transform(cli: &Cli, a: &TransformArgs, prov: &Provenance) -> Result<()> {
    let family: Family = a.op.parse()?;
    let backend: Backend = a.backend.parse()?;
    let field = read_field(&a.input)?;
    let spec = match family {
        Family::Cauchy | Family::Beurling => OperatorSpec::new(family, a.m, DomainGeometry::Plane, backend, None)?,
        Family::CauchyM | Family::BeurlingM => OperatorSpec::new(family, a.m, DomainGeometry::UnitDisk, backend, None)?,
        Family::StripCauchy | Family::StripBeurling => {
            OperatorSpec::new(family, a.m, DomainGeometry::Strip, backend, None)?
        }
        Family::DomainCauchyM | Family::DomainBeurlingM => {
            OperatorSpec::new(family, a.m, DomainGeometry::UnitDisk, backend, Some(ReflectionRule::disk()))?
        }
    };
    let label = if a.m > 0 { format!("{family}[m={}]", a.m) } else { family.to_string() };
    let result = spec.apply(&field)?.with_label(label);
    write_field(out_path(cli)?, &result, prov)
}

fn solve(cli: &Cli, a: &SolveArgs, prov: &Provenance) -> Result<()> {
    let out = out_path(cli)?;
    let field = read_field(&a.mu)?;
    let d = field.sup();
    let mu = BeltramiCoefficient::from_field(field, d)?;
    let cfg = SolverConfig { tol: cli.tol.unwrap_or(1e-10), ..SolverConfig::default() };
    let mut report = json!({ "kind": a.kind, "d": d, "provenance": prov });
    let mapping = match a.kind {
        Kind::Principal => solver::principal_solution(&mu, &cfg)?,
        Kind::Normal => solver::normal_solution_with(&mu, &cfg)?,
        Kind::Log => {
            let sol = solver::principal_log_solution(&mu, &cfg)?;
            report["deviation"] = json!(sol.deviation);
            report["c"] = json!(sol.c);
            sol.mapping
        }
        Kind::Chain => {
            let g = mu.grid().clone();
            let chain_cfg = ChainConfig { tol: cfg.tol, ..ChainConfig::new(a.k, a.m) };
            let chain = solver::derivative_chain_solve(
                &mu,
                &DomainGeometry::UnitDisk,
                Some(&ReflectionRule::disk()),
                &chain_cfg,
            )?;
            let (map, discrepancy) = solver::reconstruct_map(&chain, &mu, chain_cfg.residual_tol)?;
            let margin = solver::chain_margin(&chain)?;
            let inj =
                solver::injectivity_sample(&map.f, &g.disk_mask(), 10_000, 10.0 * g.spacing(), cli.seed.unwrap_or(7));
            report["chain"] = json!({
                "k": chain.k,
                "m": chain.m,
                "residuals": chain.residuals,
                "ratios": chain.ratios,
                "iterations": chain.iterations,
                "decay_constants": chain.decay_constants,
                "measured_b": chain.measured_b,
                "path_discrepancy": discrepancy,
                "univalence_margin": margin,
                "injectivity": inj,
            });
            map
        }
    };
    report["iterations"] = json!(mapping.diagnostics.iterations);
    report["residual"] = json!(mapping.diagnostics.residual);
    report["contraction_ratio"] = json!(mapping.diagnostics.contraction_ratio);
    write_field(out, &mapping.f, prov)?;
    if let Some(path) = &a.report {
        write_text(path, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    Ok(())
}

fn complex_cells(z: C64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

fn family(cli: &Cli, a: &FamilyArgs, prov: &Provenance) -> Result<()> {
    let out = out_path(cli)?;
    let text = fs::read_to_string(&a.spec)
        .map_err(|e| CliError::Input { path: a.spec.clone(), source: quasibel::Error::Io(e) })?;
    let mut file = FamilyFile::from_json(&text).map_err(|source| CliError::Input { path: a.spec.clone(), source })?;
    if let Some(seed) = cli.seed {
        file.seed = seed;
    }
    let fam = file.build()?;
    let mut csv = format!("# {}\n", header_line(prov));
    match a.cmd {
        FamilyCmd::Holder => {
            let mut cfg = file.holder.clone();
            if let Some(n) = cli.n {
                cfg.n = n;
            }
            if let Some(tol) = cli.tol {
                cfg.tol = tol;
            }
            let est = holder_modulus(&fam, &cfg)?;
            match est.beta {
                HolderExponent::Saturated => csv.push_str("# beta: saturated\n"),
                HolderExponent::Fitted(b) => {
                    csv.push_str(&format!("# beta: {b:?}\n# min_r2: {:?}\n", est.min_r2.unwrap_or(f64::NAN)));
                    if est.flagged {
                        csv.push_str("# flagged: some probe fit has r2 below 0.9\n");
                    }
                }
            }
            csv.push_str("re_z,im_z,dt,difference\n");
            for row in &est.table {
                csv.push_str(&format!("{},{:?},{:?}\n", complex_cells(row.z), row.dt, row.difference));
            }
        }
        FamilyCmd::Mollify => {
            let smooth = mollify_family(&fam, &file.mollifier, file.order_m)?;
            let t: Vec<f64> = if file.holder.t0.is_empty() {
                fam.bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
            } else {
                file.holder.t0.clone()
            };
            if t.len() != fam.dim() {
                return Err(CliError::Usage(format!(
                    "t0 has {} entries for a {}-parameter family",
                    t.len(),
                    fam.dim()
                )));
            }
            let g = grid::square(cli.n.unwrap_or(32), 1.0)?;
            let tcols: Vec<String> = (0..t.len()).map(|i| format!("t{i}")).collect();
            csv.push_str(&format!("re_z,im_z,{},re_mu,im_mu,re_mollified,im_mollified\n", tcols.join(",")));
            let tcells: Vec<String> = t.iter().map(|v| format!("{v:?}")).collect();
            for &z in g.nodes().iter().filter(|z| z.norm() < 1.0) {
                let (m0, m1) = (fam.at(z, &t), smooth.at(z, &t));
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    complex_cells(z),
                    tcells.join(","),
                    complex_cells(m0),
                    complex_cells(m1)
                ));
            }
        }
    }
    write_text(out, &csv)
}

fn verify(cli: &Cli, a: &VerifyArgs, prov: &Provenance) -> Result<()> {
    let checks: Vec<String> = a.suite.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig { checks, n: cli.n.unwrap_or(defaults.n), seed: cli.seed.unwrap_or(defaults.seed) };
    let reports = run_suite(&cfg)?;
    let mut text =
        serde_json::to_string(&json!({ "provenance": prov, "suite": cfg })).expect("header serializes") + "\n";
    for r in &reports {
        text.push_str(&r.to_json_line());
        text.push('\n');
        eprintln!("{:<24} {}", r.id, if r.pass { "pass" } else { "FAIL" });
    }
    match &cli.out {
        Some(path) => write_text(path, &text)?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output { path: "<stdout>".into(), source })?,
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: reports.len() });
    }
    Ok(())
}

fn render(cli: &Cli, a: &RenderArgs, prov: &Provenance) -> Result<()> {
    let out = out_path(cli)?;
    let field = read_field(&a.input)?;
    let header = header_line(prov);
    let text = match a.mode {
        Mode::Grid => render::grid_csv(&field, cli.n.unwrap_or(16), &header)?,
        Mode::Heat => render::heat_pgm(&field, a.scale, &header),
    };
    write_text(out, &text)
}
