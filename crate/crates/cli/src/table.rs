//! Versioned numeric CSV tables.
//!
//! Every file starts with a comment line `# impscat-<kind> v<version>`,
//! followed by a header row and numeric rows. Floats are written in Rust's
//! shortest round-trip form, so reading a table back reproduces the written
//! values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use impscat_core::effective_medium::{CubeGrid, IeSolution};
use impscat_core::many_body::FieldSample;
use impscat_core::{CVec3, Vec3, C64};
use thiserror::Error;

use crate::error::{CliError, Result};

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line 1: expected `# impscat-<kind> v{TABLE_FORMAT_VERSION}`, found `{0}`")]
    Header(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let m = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&m) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Table { kind: kind.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> std::result::Result<usize, TableError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    pub fn write(&self, mut w: impl Write) -> std::result::Result<(), TableError> {
        writeln!(w, "# impscat-{} v{TABLE_FORMAT_VERSION}", self.kind)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(r: impl Read) -> std::result::Result<Table, TableError> {
        let mut r = BufReader::new(r);
        let mut first = String::new();
        r.read_line(&mut first)?;
        let first = first.trim_end();
        let kind = first
            .strip_prefix("# impscat-")
            .and_then(|s| s.strip_suffix(&format!(" v{TABLE_FORMAT_VERSION}")))
            .filter(|k| !k.is_empty() && !k.contains(' '))
            .ok_or_else(|| TableError::Header(first.to_string()))?
            .to_string();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            // Physical line, counting the version comment.
            let line = rec.position().map_or(0, |p| p.line() + 1);
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| TableError::Parse { line, message: format!("`{f}`: {e}") }))
                .collect::<std::result::Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Ok(Table { kind, columns, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(CliError::io(path))?;
        self.write(BufWriter::new(f)).map_err(|source| CliError::Table { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Table> {
        let f = File::open(path).map_err(CliError::io(path))?;
        Table::read(f).map_err(|source| CliError::Table { path: path.to_path_buf(), source })
    }
}

const E_COLUMNS: [&str; 6] = ["re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez"];
const H_COLUMNS: [&str; 6] = ["re_hx", "im_hx", "re_hy", "im_hy", "re_hz", "im_hz"];
const A_COLUMNS: [&str; 6] = ["re_ax", "im_ax", "re_ay", "im_ay", "re_az", "im_az"];

fn push_complex(row: &mut Vec<f64>, v: &CVec3) {
    for c in v.0 {
        row.push(c.re);
        row.push(c.im);
    }
}

fn complex_at(row: &[f64], start: usize) -> CVec3 {
    CVec3(std::array::from_fn(|i| C64::new(row[start + 2 * i], row[start + 2 * i + 1])))
}

fn columns_with(base: &[&'static str], blocks: &[&[&'static str; 6]]) -> Vec<&'static str> {
    let mut cols = base.to_vec();
    for b in blocks {
        cols.extend_from_slice(&b[..]);
    }
    cols
}

/// Field samples; `H` columns are present only when every sample has `H`.
pub fn field_table(samples: &[FieldSample]) -> Table {
    let with_h = !samples.is_empty() && samples.iter().all(|s| s.h.is_some());
    let blocks: Vec<&[&str; 6]> = if with_h { vec![&E_COLUMNS, &H_COLUMNS] } else { vec![&E_COLUMNS] };
    let mut t = Table::new("fields", &columns_with(&["x", "y", "z"], &blocks));
    for s in samples {
        let mut row = s.position.0.to_vec();
        push_complex(&mut row, &s.e);
        if with_h {
            push_complex(&mut row, &s.h.expect("checked above"));
        }
        t.push(row);
    }
    t
}

pub fn samples_from_table(t: &Table) -> std::result::Result<Vec<FieldSample>, TableError> {
    let x = t.column("x")?;
    let e = t.column("re_ex")?;
    let h = t.column("re_hx").ok();
    Ok(t.rows
        .iter()
        .map(|r| FieldSample {
            position: Vec3::new(r[x], r[x + 1], r[x + 2]),
            e: complex_at(r, e),
            h: h.map(|h| complex_at(r, h)),
        })
        .collect())
}

/// Grid solution row: cube center, `E` and `A = ∇×E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRecord {
    pub center: Vec3,
    pub e: CVec3,
    pub curl: CVec3,
}

pub fn grid_table(grid: &CubeGrid, sol: &IeSolution) -> Table {
    let mut t = Table::new("grid", &columns_with(&["x", "y", "z"], &[&E_COLUMNS, &A_COLUMNS]));
    for ((c, e), a) in grid.cells.iter().zip(&sol.e).zip(&sol.curl) {
        let mut row = c.center.0.to_vec();
        push_complex(&mut row, e);
        push_complex(&mut row, a);
        t.push(row);
    }
    t
}

pub fn grid_from_table(t: &Table) -> std::result::Result<Vec<GridRecord>, TableError> {
    let x = t.column("x")?;
    let e = t.column("re_ex")?;
    let a = t.column("re_ax")?;
    Ok(t.rows
        .iter()
        .map(|r| GridRecord { center: Vec3::new(r[x], r[x + 1], r[x + 2]), e: complex_at(r, e), curl: complex_at(r, a) })
        .collect())
}
