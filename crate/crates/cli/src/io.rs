//! CSV and JSON files. Every CSV starts with one `# config: {...}` line
//! carrying the resolved run configuration, followed by the header row.
//! Numbers use the shortest representation that reads back exactly; unknown
//! values are empty cells.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use vortex_core::{RetrievedField, VelocityObservation, VoidMap};

use crate::error::CliError;

fn num(x: f64) -> String {
    // no "-0" cells
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path, config_line: &str) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config: {config_line}")?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<BufWriter<File>>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(e.into())
}

/// `r,z,psi,u,v,w,flag` for every node.
pub fn write_field(path: &Path, config_line: &str, field: &RetrievedField) -> Result<(), CliError> {
    write_field_below(path, config_line, field, f64::INFINITY)
}

/// As [`write_field`], restricted to nodes with `z ≤ z_max`.
pub fn write_field_below(
    path: &Path,
    config_line: &str,
    field: &RetrievedField,
    z_max: f64,
) -> Result<(), CliError> {
    let mut w = writer(path, config_line)?;
    w.write_record(["r", "z", "psi", "u", "v", "w", "flag"]).map_err(csv_io)?;
    for k in 0..field.grid.len() {
        let (r, z) = field.grid.point(k);
        if z > z_max {
            break;
        }
        w.write_record([
            num(r),
            num(z),
            opt(field.psi[k]),
            opt(field.u[k]),
            num(field.v[k]),
            opt(field.w[k]),
            field.flags[k].code().to_string(),
        ])
        .map_err(csv_io)?;
    }
    finish(w)
}

/// `r,z,flag` with flag codes 0 observable, 1 reachable, 2 void, 3 boundary
/// limited.
pub fn write_void(path: &Path, config_line: &str, map: &VoidMap) -> Result<(), CliError> {
    let mut w = writer(path, config_line)?;
    w.write_record(["r", "z", "flag"]).map_err(csv_io)?;
    for k in 0..map.grid.len() {
        let (r, z) = map.grid.point(k);
        w.write_record([num(r), num(z), map.flags[k].code().to_string()]).map_err(csv_io)?;
    }
    finish(w)
}

pub fn write_polyline(path: &Path, config_line: &str, points: &[(f64, f64)]) -> Result<(), CliError> {
    let mut w = writer(path, config_line)?;
    w.write_record(["r", "z"]).map_err(csv_io)?;
    for &(r, z) in points {
        w.write_record([num(r), num(z)]).map_err(csv_io)?;
    }
    finish(w)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input { path: path.display().to_string(), msg: e.to_string() })?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let shown = path.display().to_string();
    let mut rdr = reader(path)?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                let msg = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                };
                return Err(CliError::Csv { path: shown, line, msg });
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Input { path: shown, msg: "no data rows".into() });
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct ObsRow {
    r: f64,
    z: f64,
    v: f64,
    sigma: f64,
}

/// Observations from a CSV with columns `r,z,v,sigma`.
pub fn read_observations(path: &Path) -> Result<Vec<VelocityObservation>, CliError> {
    Ok(read_rows::<ObsRow>(path)?
        .into_iter()
        .map(|o| VelocityObservation { r: o.r, z: o.z, v: o.v, sigma: o.sigma })
        .collect())
}

#[derive(Deserialize)]
struct RadialRow {
    r: f64,
    u: f64,
}

/// Tabulated radial velocity on the MOH line, columns `r,u`, with strictly
/// increasing radii starting at the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r: Vec<f64>,
    u: Vec<f64>,
}

impl RadialProfile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let rows = read_rows::<RadialRow>(path)?;
        let bad = |msg: &str| CliError::Input { path: path.display().to_string(), msg: msg.into() };
        if rows.len() < 2 {
            return Err(bad("need at least two rows"));
        }
        if rows[0].r != 0.0 {
            return Err(bad("first row must be at r = 0"));
        }
        if rows.windows(2).any(|w| !(w[1].r > w[0].r)) {
            return Err(bad("radii must be strictly increasing"));
        }
        if rows.iter().any(|row| !(row.r.is_finite() && row.u.is_finite())) {
            return Err(bad("non-finite value"));
        }
        Ok(Self { r: rows.iter().map(|x| x.r).collect(), u: rows.iter().map(|x| x.u).collect() })
    }

    pub fn max_radius(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Piecewise-linear interpolation; constant beyond the last radius.
    pub fn at(&self, r: f64) -> f64 {
        let k = self.r.partition_point(|&x| x <= r);
        if k == 0 {
            return self.u[0];
        }
        if k == self.r.len() {
            return self.u[k - 1];
        }
        let t = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        self.u[k - 1] + t * (self.u[k] - self.u[k - 1])
    }
}
