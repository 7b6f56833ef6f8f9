//! Headerless numeric CSV readers and writers.
//!
//! All matrix files in the dataset and model formats are plain decimal text,
//! one sample per row. Floats are written with Rust's shortest round-trip
//! formatting, so a write/read cycle reproduces values bit-exactly.

use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// Read a rectangular matrix of decimals. Ragged rows are rejected.
pub(crate) fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut rdr = reader(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: r,
                    col: record.len(),
                    message: format!("expected {c} columns, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: r,
                col: c,
                message: format!("not a number: {field:?}"),
            })?;
            data.push(value);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        col: 0,
        message: e.to_string(),
    })
}

pub(crate) fn write_matrix(path: &Path, matrix: ArrayView2<'_, f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    for row in matrix.rows() {
        let record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        wtr.write_record(&record).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    wtr.flush().map_err(|source| Error::io(path, source))?;
    Ok(())
}

/// Read one non-negative integer per row (class labels).
pub(crate) fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if record.len() != 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r,
                col: record.len(),
                message: "labels file must have one column".into(),
            });
        }
        let raw: i64 = record[0].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row: r,
            col: 0,
            message: format!("not an integer: {:?}", &record[0]),
        })?;
        if raw < 0 {
            return Err(Error::NegativeLabel { row: r });
        }
        out.push(raw as usize);
    }
    Ok(out)
}

pub(crate) fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    for label in labels {
        wtr.write_record([label.to_string()])
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
    }
    wtr.flush().map_err(|source| Error::io(path, source))?;
    Ok(())
}

/// Read an n x v presence mask of 0/1 entries.
pub(crate) fn read_mask(path: &Path) -> Result<Vec<Vec<bool>>> {
    let mut rdr = reader(path)?;
    let mut out: Vec<Vec<bool>> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            match field {
                "0" => row.push(false),
                "1" => row.push(true),
                _ => return Err(Error::MaskValue { row: r, col: c }),
            }
        }
        if let Some(first) = out.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: r,
                    col: row.len(),
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        out.push(row);
    }
    Ok(out)
}

pub(crate) fn write_mask(path: &Path, mask: &[Vec<bool>]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    for row in mask {
        let record: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        wtr.write_record(&record).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    wtr.flush().map_err(|source| Error::io(path, source))?;
    Ok(())
}
