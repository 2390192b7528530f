//! CSV ingestion and atomic output.
//!
//! Row numbers in errors are 1-based file lines (the header is line 1 when
//! present); columns are 1-based.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Samples read from a training file with header `x,y1,...,yn`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub x: Vec<f64>,
    /// One row of `n` targets per sample.
    pub y: Vec<Vec<f64>>,
}

impl TrainingData {
    pub fn tasks(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }
}

fn csv_err(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Csv { path: path.display().to_string(), row, column, message: message.into() }
}

fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| csv_err(path, row, column, format!("'{cell}' is not a number")))?;
    if !v.is_finite() {
        return Err(csv_err(path, row, column, "value is not finite"));
    }
    Ok(v)
}

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path)?;
    Ok(csv::ReaderBuilder::new().has_headers(headers).flexible(true).from_reader(file))
}

fn rows(path: &Path, headers: bool, width: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(path, headers)?;
    let offset = if headers { 2 } else { 1 };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + offset;
        let rec = rec.map_err(|e| csv_err(path, line, 0, e.to_string()))?;
        let expected = width.unwrap_or_else(|| out.first().map_or(rec.len(), Vec::len));
        if rec.len() != expected {
            return Err(csv_err(
                path,
                line,
                rec.len().min(expected) + 1,
                format!("expected {expected} columns, found {}", rec.len()),
            ));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_cell(path, line, j + 1, cell))
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Headerless square matrix, one row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    rows(path, false, None)
}

pub fn read_training_csv(path: &Path) -> Result<TrainingData> {
    let mut rdr = reader(path, true)?;
    let header = rdr.headers().map_err(|e| csv_err(path, 1, 0, e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(csv_err(path, 1, header.len() + 1, "header must be x,y1,...,yn"));
    }
    if header.get(0).map(str::trim) != Some("x") {
        return Err(csv_err(path, 1, 1, "first column must be named x"));
    }
    let data = rows(path, true, Some(header.len()))?;
    if data.is_empty() {
        return Err(csv_err(path, 2, 1, "no samples"));
    }
    let (x, y) = data.into_iter().map(|mut r| (r.remove(0), r)).unzip();
    Ok(TrainingData { x, y })
}

/// Query points: header whose first column is `x`; other columns are ignored
/// but must be numeric and consistent in count.
pub fn read_points_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = reader(path, true)?;
    let header = rdr.headers().map_err(|e| csv_err(path, 1, 0, e.to_string()))?.clone();
    if header.get(0).map(str::trim) != Some("x") {
        return Err(csv_err(path, 1, 1, "first column must be named x"));
    }
    Ok(rows(path, true, Some(header.len()))?.into_iter().map(|r| r[0]).collect())
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Formats rows as CSV text. Reals use the shortest round-trip representation.
pub fn format_csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
