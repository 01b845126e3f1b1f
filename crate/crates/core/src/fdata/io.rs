//! CSV readers and writers for functional datasets and label vectors.
//!
//! Wide layout: the first line holds the grid points, every following line
//! one curve; an empty field marks a missing value. Long layout: header
//! `id,t,value` followed by one observation per line.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{FunctionalData, Grid};
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    Wide,
    Long,
}

impl std::str::FromStr for CsvLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(CsvLayout::Wide),
            "long" => Ok(CsvLayout::Long),
            other => Err(Error::Parameter(format!("unknown CSV layout `{other}`"))),
        }
    }
}

fn parse_cell<T: Scalar>(field: &str, row: usize, column: usize) -> Result<Option<T>> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = f.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("`{f}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("`{f}` is not finite"),
        });
    }
    Ok(Some(T::lit(v)))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, layout: CsvLayout) -> Result<FunctionalData<T>> {
    let file = std::fs::File::open(path)?;
    read_csv(file, layout)
}

/// Parses a dataset from any reader. Rows and columns in errors are 1-based.
pub fn read_csv<T: Scalar, R: Read>(input: R, layout: CsvLayout) -> Result<FunctionalData<T>> {
    match layout {
        CsvLayout::Wide => read_wide(input),
        CsvLayout::Long => read_long(input),
    }
}

fn read_wide<T: Scalar, R: Read>(input: R) -> Result<FunctionalData<T>> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Format("empty file: missing grid header".into()))??;
    let mut points = Vec::with_capacity(header.len());
    for (c, f) in header.iter().enumerate() {
        let v = parse_cell::<T>(f, 1, c + 1)?.ok_or(Error::Parse {
            row: 1,
            column: c + 1,
            message: "empty grid point".into(),
        })?;
        points.push(v);
    }
    let grid = Grid::new(points)?;
    let t = grid.len();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut n = 0;
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        let row = r + 2;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != t {
            return Err(Error::Parse {
                row,
                column: rec.len().min(t) + 1,
                message: format!("expected {t} fields, found {}", rec.len()),
            });
        }
        for (c, f) in rec.iter().enumerate() {
            match parse_cell::<T>(f, row, c + 1)? {
                Some(v) => {
                    values.push(v);
                    mask.push(false);
                }
                None => {
                    values.push(T::nan());
                    mask.push(true);
                }
            }
        }
        n += 1;
    }
    let values = Array2::from_shape_vec((n, t), values).map_err(|e| Error::Format(e.to_string()))?;
    let mask = Array2::from_shape_vec((n, t), mask).map_err(|e| Error::Format(e.to_string()))?;
    FunctionalData::with_mask(grid, values, mask)
}

fn read_long<T: Scalar, R: Read>(input: R) -> Result<FunctionalData<T>> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Format("empty file: missing `id,t,value` header".into()))??;
    let names: Vec<String> = header.iter().map(|s| s.to_ascii_lowercase()).collect();
    if names != ["id", "t", "value"] {
        return Err(Error::Format(format!(
            "long layout header must be `id,t,value`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut obs: Vec<(usize, f64, Option<T>)> = Vec::new();
    let mut ts: BTreeSet<u64> = BTreeSet::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        let row = r + 2;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Parse {
                row,
                column: rec.len().min(3) + 1,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let id = rec[0].to_string();
        let t: f64 = parse_cell::<f64>(&rec[1], row, 2)?.ok_or(Error::Parse {
            row,
            column: 2,
            message: "empty abscissa".into(),
        })?;
        let v = parse_cell::<T>(&rec[2], row, 3)?;
        let idx = *id_index.entry(id.clone()).or_insert_with(|| {
            ids.push(id);
            ids.len() - 1
        });
        // canonical total-order key for f64 (all finite here)
        ts.insert(ordered_key(t));
        obs.push((idx, t, v));
    }
    let grid_f64: Vec<f64> = ts.iter().map(|&k| from_key(k)).collect();
    let grid = Grid::new(grid_f64.iter().map(|&v| T::lit(v)).collect())?;
    let col: HashMap<u64, usize> = ts.iter().enumerate().map(|(j, &k)| (k, j)).collect();
    let n = ids.len();
    let t = grid.len();
    let mut values = Array2::from_elem((n, t), T::nan());
    let mut mask = Array2::from_elem((n, t), true);
    for (i, tt, v) in obs {
        let j = col[&ordered_key(tt)];
        if let Some(v) = v {
            if !mask[[i, j]] {
                return Err(Error::Format(format!(
                    "duplicate observation for curve `{}` at t = {tt}",
                    ids[i]
                )));
            }
            values[[i, j]] = v;
            mask[[i, j]] = false;
        }
    }
    FunctionalData::with_mask(grid, values, mask)
}

fn ordered_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Formats a scalar with the shortest representation that parses back to
/// exactly the same value.
pub fn format_scalar<T: Scalar>(v: T) -> String {
    if v.is_nan() {
        return String::new();
    }
    format!("{v}")
}

pub fn write_csv<T: Scalar, W: Write>(ds: &FunctionalData<T>, mut out: W) -> Result<()> {
    let header: Vec<String> = ds.grid().points().iter().map(|&v| format_scalar(v)).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.n_curves() {
        let row: Vec<String> = (0..ds.n_points())
            .map(|j| {
                if ds.is_missing(i, j) {
                    String::new()
                } else {
                    format_scalar(ds.values()[[i, j]])
                }
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_csv<T: Scalar>(ds: &FunctionalData<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(ds, &mut file)?;
    file.flush()?;
    Ok(())
}

/// Reads a single-column label file with header `label`.
pub fn read_labels<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut rdr = reader(input);
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("").trim();
        if r == 0 && field.eq_ignore_ascii_case("label") {
            continue;
        }
        if field.is_empty() {
            continue;
        }
        let v: usize = field.parse().map_err(|_| Error::Parse {
            row: r + 1,
            column: 1,
            message: format!("`{field}` is not a nonnegative integer label"),
        })?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    read_labels(std::fs::File::open(path)?)
}

pub fn write_labels<W: Write>(labels: &[usize], mut out: W) -> Result<()> {
    writeln!(out, "label")?;
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_labels(labels, &mut file)?;
    file.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_single_row() {
        let ds: FunctionalData<f64> = read_csv("0,0.5,1\n1,2,3\n".as_bytes(), CsvLayout::Wide).unwrap();
        assert_eq!(ds.n_curves(), 1);
        assert_eq!(ds.grid().points(), &[0.0, 0.5, 1.0]);
        assert_eq!(ds.curve(0), &[1.0, 2.0, 3.0]);
        assert!(ds.is_complete());
    }

    #[test]
    fn long_pivot() {
        let text = "id,t,value\na,0,1\na,0.5,2\na,1,3\nb,1,6\nb,0,4\nb,0.5,5\n";
        let ds: FunctionalData<f64> = read_csv(text.as_bytes(), CsvLayout::Long).unwrap();
        assert_eq!((ds.n_curves(), ds.n_points()), (2, 3));
        assert_eq!(ds.curve(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn long_with_unsorted_times_and_gap() {
        let text = "id,t,value\na,1,3\na,0,1\nb,0.5,5\n";
        let ds: FunctionalData<f64> = read_csv(text.as_bytes(), CsvLayout::Long).unwrap();
        assert_eq!(ds.grid().points(), &[0.0, 0.5, 1.0]);
        assert!(ds.is_missing(0, 1));
        assert!(ds.is_missing(1, 0) && ds.is_missing(1, 2));
    }

    #[test]
    fn empty_cell_is_missing() {
        let ds: FunctionalData<f64> = read_csv("0,0.5,1\n1,2,3\n4,,6\n".as_bytes(), CsvLayout::Wide).unwrap();
        assert!(ds.is_missing(1, 1));
        assert!(!ds.is_missing(0, 1));
    }

    #[test]
    fn malformed_cell_reports_position() {
        let err = read_csv::<f64, _>("0,0.5,1\n1,x,3\n".as_bytes(), CsvLayout::Wide).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_grid_is_format_error() {
        let err = read_csv::<f64, _>("0,1,0.5\n1,2,3\n".as_bytes(), CsvLayout::Wide).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn write_then_read_is_lossless() {
        let g = Grid::new(vec![0.0, 1.0 / 3.0, 1.0]).unwrap();
        let ds = FunctionalData::from_rows(g, &[vec![0.1, 2.0 / 7.0, -1e-9], vec![1e12, 3.5, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back: FunctionalData<f64> = read_csv(buf.as_slice(), CsvLayout::Wide).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn labels_round_trip() {
        let mut buf = Vec::new();
        write_labels(&[0, 1, 1, 2], &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), vec![0, 1, 1, 2]);
        assert!(read_labels("label\n-1\n".as_bytes()).is_err());
    }
}
