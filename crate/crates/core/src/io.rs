//! File formats for shapes, point clouds and transport plans.
//!
//! A grid density is a JSON header plus a raw little-endian `f64` file of the
//! cell values in row-major order. The header's `data_file` is resolved
//! relative to the header's directory. Point clouds are CSV with a mandatory
//! `x1,...,xd,weight` header row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, GridDensity, GridSpec, Point};
use crate::transport::TransportPlan;

/// JSON header of a grid density file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dimension: usize,
    pub origin: Vec<f64>,
    pub cell_size: f64,
    pub dims: Vec<usize>,
    pub data_file: String,
}

fn data_path(header_path: &Path, data_file: &str) -> PathBuf {
    header_path.parent().map_or_else(|| PathBuf::from(data_file), |dir| dir.join(data_file))
}

/// Writes `rho` to `path` and its values next to it, with the extension
/// replaced by `.f64`.
pub fn write_grid(path: &Path, rho: &GridDensity) -> Result<()> {
    let spec = rho.spec();
    let data_name = path
        .with_extension("f64")
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad grid path {}", path.display())))?
        .to_string();
    let header = GridHeader {
        dimension: spec.dimension(),
        origin: spec.origin.clone(),
        cell_size: spec.cell_size,
        dims: spec.dims.clone(),
        data_file: data_name.clone(),
    };
    let mut bytes = Vec::with_capacity(8 * rho.values().len());
    for v in rho.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(data_path(path, &data_name), bytes)?;
    write_json(path, &header)
}

/// Reads a grid density written by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<GridDensity> {
    let header: GridHeader = read_json(path)?;
    if header.dimension != header.origin.len() {
        return Err(Error::InvalidInput(format!(
            "header dimension {} but origin has {} entries",
            header.dimension,
            header.origin.len()
        )));
    }
    let spec = GridSpec::new(header.origin, header.cell_size, header.dims)?;
    let bytes = fs::read(data_path(path, &header.data_file))?;
    if bytes.len() != 8 * spec.n_cells() {
        return Err(Error::ResolutionMismatch(format!(
            "{} holds {} bytes, header needs {}",
            header.data_file,
            bytes.len(),
            8 * spec.n_cells()
        )));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    GridDensity::new(spec, values)
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{}: {e}", path.display()))
}

/// Reads a CSV of numbers with a mandatory header row, checking each row
/// against the header width.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(csv_error(path, "missing header row"));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| csv_error(path, format!("row {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads a point cloud with columns `x1..xd,weight`.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let (header, rows) = read_table(path)?;
    let d = header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["weight".to_string()]).collect();
    if d == 0 || header != expected {
        return Err(csv_error(path, format!("header must be {}", expected.join(","))));
    }
    let points: Vec<Point> = rows.iter().map(|r| Point::from_column_slice(&r[..d])).collect();
    let weights = rows.iter().map(|r| r[d]).collect();
    DiscreteMeasure::new(points, weights)
}

/// Writes a point cloud with columns `x1..xd,weight`.
pub fn write_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let d = mu.dim();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["weight".to_string()]).collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (p, wt) in mu.points().iter().zip(mu.weights()) {
        let row: Vec<String> = p.iter().chain(std::iter::once(wt)).map(|v| format!("{v:?}")).collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one value vector per row, under any header naming the components.
pub fn read_values(path: &Path) -> Result<Vec<Vec<f64>>> {
    Ok(read_table(path)?.1)
}

/// Number with 17 significant digits, which round-trips every `f64`.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the plan as JSON with `total_cost` and a `couplings` list of
/// `[source, target, mass]`, all reals printed with 17 significant digits.
pub fn write_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "{{\n  \"source_count\": {},\n  \"target_count\": {},\n  \"total_cost\": {},\n  \"couplings\": [",
        plan.source.len(),
        plan.target.len(),
        sig17(plan.quadratic_cost())
    ));
    for (k, c) in plan.couplings.iter().enumerate() {
        let sep = if k == 0 { "" } else { "," };
        out.push_str(&format!("{sep}\n    [{}, {}, {}]", c.source, c.target, sig17(c.mass)));
    }
    out.push_str("\n  ]\n}\n");
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Contents of a plan file.
#[derive(Clone, Debug, Deserialize)]
pub struct PlanFile {
    pub source_count: usize,
    pub target_count: usize,
    pub total_cost: f64,
    pub couplings: Vec<(usize, usize, f64)>,
}

pub fn read_plan(path: &Path) -> Result<PlanFile> {
    read_json(path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
