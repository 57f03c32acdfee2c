//! CSV helpers shared by every exporter. Floats are written with 17
//! significant digits so that files re-read bit-identically.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse { path: path.to_owned(), line, reason: format!("{other:?}") },
    }
}

pub fn create_writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

/// Writes equally long float columns under `headers`.
pub fn write_columns(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(headers.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
    let mut w = create_writer(path)?;
    w.write_record(headers).map_err(|e| csv_err(path, e))?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_f64(c[i]))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes pre-formatted string rows.
pub fn write_rows<I, R>(path: &Path, headers: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = create_writer(path)?;
    w.write_record(headers).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a float CSV whose header must equal `headers`; returns columns.
pub fn read_columns(path: &Path, headers: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let found = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if found.iter().map(str::trim).ne(headers.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            reason: format!("expected header `{}`, found `{}`", headers.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut cols = vec![Vec::new(); headers.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                reason: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (col, field) in cols.iter_mut().zip(rec.iter()) {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                reason: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { path: path.to_owned(), line, reason: format!("non-finite value `{field}`") });
            }
            col.push(v);
        }
    }
    Ok(cols)
}
