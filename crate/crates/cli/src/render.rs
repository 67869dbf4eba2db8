use std::fmt::Write;

use quasibel::grid::SampledField;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Grid,
    Heat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

/// Decades shown by the log scale below the maximum.
const LOG_DECADES: f64 = 6.0;

/// Every `stride`-th lattice row and column, pushed through the field.
/// Columns: line, axis (x lines hold y fixed), vertex, x, y.
pub fn grid_csv(field: &SampledField, lines: usize, header: &str) -> Result<String> {
    if lines == 0 {
        return Err(CliError::Usage("--n must be positive for grid rendering".into()));
    }
    let g = &field.grid;
    let (n, rows) = (g.n(), g.rows());
    let mut out = String::new();
    writeln!(out, "# {header}").unwrap();
    out.push_str("line,axis,vertex,x,y\n");
    let mut line = 0;
    for j in (0..rows).step_by((rows / lines).max(1)) {
        for i in 0..n {
            let v = field.values[j * n + i];
            writeln!(out, "{line},x,{i},{:?},{:?}", v.re, v.im).unwrap();
        }
        line += 1;
    }
    for i in (0..n).step_by((n / lines).max(1)) {
        for j in 0..rows {
            let v = field.values[j * n + i];
            writeln!(out, "{line},y,{j},{:?},{:?}", v.re, v.im).unwrap();
        }
        line += 1;
    }
    Ok(out)
}

/// Plain (ASCII) graymap of |values|, top row at the largest y.
pub fn heat_pgm(field: &SampledField, scale: Scale, header: &str) -> String {
    let g = &field.grid;
    let (n, rows) = (g.n(), g.rows());
    let max = field.sup();
    let level = |v: f64| -> u8 {
        if max == 0.0 || v == 0.0 {
            return 0;
        }
        let x = match scale {
            Scale::Linear => v / max,
            Scale::Log => 1.0 + (v / max).log10() / LOG_DECADES,
        };
        (255.0 * x.clamp(0.0, 1.0)).round() as u8
    };
    let mut out = String::new();
    writeln!(out, "P2\n# {header}\n{n} {rows}\n255").unwrap();
    for j in (0..rows).rev() {
        let row: Vec<String> = (0..n).map(|i| level(field.values[j * n + i].norm()).to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}
