//! CSV and `key=value` output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dynamics::Snapshot;
use crate::error::{Error, Result};
use crate::mesh::{Field, Grid};

pub const TIMESERIES_COLUMNS: [&str; 13] = [
    "t",
    "dt",
    "E",
    "J",
    "I",
    "l2_u",
    "lp1_u",
    "linf_u",
    "l2_v",
    "grad_u_sq",
    "lap_u_sq",
    "dissipation_rate",
    "energy_residual",
];

/// 17 significant digits, round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(csv_err)
}

pub fn write_row<W: Write>(w: &mut csv::Writer<W>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(csv_err)
}

/// Node coordinates and values, one node per row.
pub fn write_field_csv(path: &Path, grid: &Grid, field: &Field) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header: &[&str] = if grid.dim() == 1 { &["x", "value"] } else { &["x", "y", "value"] };
    w.write_record(header).map_err(csv_err)?;
    for (idx, &v) in field.values().iter().enumerate() {
        let c = grid.coords(idx);
        let mut row: Vec<String> = c[..grid.dim()].iter().map(|&x| fmt_f64(x)).collect();
        row.push(fmt_f64(v));
        write_row(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeseries(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TIMESERIES_COLUMNS).map_err(csv_err)?;
    for s in snapshots {
        let f = &s.functionals;
        let row = [
            s.t,
            s.dt,
            f.e,
            f.j,
            f.i,
            f.l2_u,
            f.lp1_u,
            s.linf_u,
            f.l2_v,
            f.grad_u_sq,
            f.lap_u_sq,
            s.dissipation_rate,
            s.energy_residual,
        ];
        write_row(&mut w, &row.map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_key_values(path: &Path, lines: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in lines {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `key=value` lines back into pairs.
pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}
