//! The QBF-1 field format: one JSON header line followed by CSV rows
//! `re(z),im(z),re(v),im(v)` in node order.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Extent, GridKind, SampledField};

pub const FORMAT: &str = "QBF-1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    kind: GridKind,
    n: usize,
    extent: Extent,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn write<W: Write>(mut out: W, field: &SampledField, provenance: Option<&Provenance>) -> Result<()> {
    let header = Header {
        format: FORMAT.to_string(),
        kind: field.grid.kind(),
        n: field.grid.n(),
        extent: field.grid.extent().clone(),
        label: field.label.clone(),
        provenance: provenance.cloned(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    // Display for f64 prints the shortest string that parses back to the same bits.
    for (z, v) in field.grid.nodes().iter().zip(&field.values) {
        writeln!(out, "{},{},{},{}", z.re, z.im, v.re, v.im)?;
    }
    Ok(())
}

pub fn read<R: BufRead>(input: R) -> Result<(SampledField, Option<Provenance>)> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty file".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| Error::Format(format!("bad header line: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::Format(format!("unsupported format tag {:?}", header.format)));
    }
    let grid = make_grid(header.kind, header.n, header.extent)?;
    let scale = grid.nodes().iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {}: {e}", row + 1)))?;
        if parts.len() != 4 {
            return Err(Error::Format(format!("row {} has {} columns, expected 4", row + 1, parts.len())));
        }
        let k = values.len();
        if k >= grid.len() {
            return Err(Error::Format(format!("more rows than the {} grid nodes", grid.len())));
        }
        let z = C64::new(parts[0], parts[1]);
        if (z - grid.node(k)).norm() > 1e-9 * scale {
            return Err(Error::Format(format!("row {} lists node {z}, grid has {}", row + 1, grid.node(k))));
        }
        values.push(C64::new(parts[2], parts[3]));
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!("{} rows for {} grid nodes", values.len(), grid.len())));
    }
    let field = SampledField::new(grid, values, header.label)?;
    Ok((field, header.provenance))
}

pub fn write_file(path: impl AsRef<Path>, field: &SampledField, provenance: Option<&Provenance>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write(&mut w, field, provenance)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<(SampledField, Option<Provenance>)> {
    let file = std::fs::File::open(path)?;
    read(std::io::BufReader::new(file))
}
