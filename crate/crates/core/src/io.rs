//! Points CSV and JSON files.
//!
//! Points CSV: UTF-8, header `dim0,dim1,...,dim{L-1}`, then one point per
//! line with `L` comma-separated decimal floats. LF or CRLF line endings.
//! Values are written with 17 significant digits so every `f64` survives a
//! write/read cycle unchanged.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::targets::Mixture;

/// Raw contents of a points CSV. `rows` may be zero.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub dim: usize,
    pub rows: usize,
    pub data: Vec<f64>,
}

impl CsvTable {
    pub fn into_cloud(self) -> Result<PointCloud> {
        PointCloud::new(self.rows, self.dim, self.data)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn map_csv_err(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => io_err(path, e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => parse_err(
            path,
            line,
            format!("ragged row: {len} fields, header has {expected_len}"),
        ),
        csv::ErrorKind::Utf8 { err, .. } => parse_err(path, line, format!("invalid UTF-8: {err}")),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));

    let header = reader.headers().map_err(|e| map_csv_err(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(path, 1, "missing header dim0,...,dim{L-1}"));
    }
    for (i, name) in header.iter().enumerate() {
        if name != format!("dim{i}") {
            return Err(parse_err(
                path,
                1,
                format!("header column {i} is {name:?}, expected \"dim{i}\""),
            ));
        }
    }
    let dim = header.len();

    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| map_csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                parse_err(
                    path,
                    line,
                    format!("column {col}: {field:?} is not a number"),
                )
            })?;
            if !value.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("column {col}: non-finite value {field:?}"),
                ));
            }
            data.push(value);
        }
        rows += 1;
    }
    Ok(CsvTable { dim, rows, data })
}

/// Reads a non-empty points file.
pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    let table = read_csv_table(path)?;
    if table.rows == 0 {
        return Err(parse_err(path, 2, "points file has no rows"));
    }
    table.into_cloud()
}

pub fn write_points_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    write_points(&mut out, cloud).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub fn write_points<W: Write>(out: &mut W, cloud: &PointCloud) -> std::io::Result<()> {
    let header: Vec<String> = (0..cloud.dim()).map(|i| format!("dim{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in cloud.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn read_mixture_spec(path: &Path) -> Result<Mixture> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
