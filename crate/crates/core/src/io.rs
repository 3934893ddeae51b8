//! Dataset and side-information file formats.
//!
//! * Dense CSV: response in the first column, features after it. A first
//!   line whose first cell is not a number is treated as a header.
//! * Sparse text: `label idx:val idx:val …` with 1-based, strictly
//!   increasing indices.
//! * Group files: one group per line, whitespace-separated 0-based indices.
//! * Laplacians: dense CSV, no header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atoms::GroupPartition;
use crate::data::{Dataset, DenseMatrix, FeatureMatrix, RowView, SparseMatrix, Vector};
use crate::error::{Error, Result};

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn split_cells(line: &str) -> impl Iterator<Item = &str> {
    line.split(',').map(str::trim)
}

pub fn parse_dense_csv(text: &str) -> Result<Dataset> {
    let mut width: Option<usize> = None;
    let mut responses = Vec::new();
    let mut data = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = split_cells(line).collect();
        if width.is_none() && responses.is_empty() && cells[0].parse::<f64>().is_err() {
            // header
            width = Some(cells.len());
            continue;
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {w} columns, found {}", cells.len()),
                ))
            }
            _ => {}
        }
        if cells.len() < 2 {
            return Err(parse_err(line_no, "need a response and at least one feature"));
        }
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric cell `{cell}` in column {}", c + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite cell in column {}", c + 1)));
            }
            if c == 0 {
                responses.push(v);
            } else {
                data.push(v);
            }
        }
    }
    let n = responses.len();
    if n == 0 {
        return Err(Error::Empty("CSV has no data rows"));
    }
    let d = data.len() / n;
    Dataset::infer_kind(
        DenseMatrix::new(n, d, data)?.into(),
        Vector::new(responses)?,
    )
}

pub fn load_dense_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dense_csv(&read(path.as_ref())?)
}

/// Parses sparse text. The dimension is the largest index seen unless
/// `dims` overrides it.
pub fn parse_sparse(text: &str, dims: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut responses = Vec::new();
    let mut max_index = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().unwrap_or_default();
        let y: f64 = label
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label `{label}`")))?;
        if !y.is_finite() {
            return Err(parse_err(line_no, "non-finite label"));
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected idx:val, found `{tok}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index `{i}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value `{v}`")))?;
            if i == 0 {
                return Err(parse_err(line_no, "indices are 1-based; found 0"));
            }
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value at index {i}")));
            }
            if row.last().is_some_and(|&(prev, _)| i - 1 <= prev) {
                return Err(parse_err(line_no, "indices must be strictly increasing"));
            }
            max_index = max_index.max(i);
            row.push((i - 1, v));
        }
        rows.push(row);
        responses.push(y);
    }
    let d = match dims {
        Some(d) if d < max_index => {
            return Err(Error::InvalidArgument(format!(
                "--dims {d} is smaller than the largest index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    Dataset::infer_kind(
        SparseMatrix::from_rows(d, &rows)?.into(),
        Vector::new(responses)?,
    )
}

pub fn load_sparse(path: impl AsRef<Path>, dims: Option<usize>) -> Result<Dataset> {
    parse_sparse(&read(path.as_ref())?, dims)
}

/// Dense CSV text with a `y,x1,…,xd` header.
pub fn to_dense_csv(ds: &Dataset) -> String {
    let mut out = String::from("y");
    for j in 1..=ds.d() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for (row, y) in ds.features().rows().zip(ds.responses().iter()) {
        let _ = write!(out, "{y}");
        for v in row.to_dense(ds.d()) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Sparse text; zero entries of dense rows are omitted.
pub fn to_sparse_text(ds: &Dataset) -> String {
    let mut out = String::new();
    for (row, y) in ds.features().rows().zip(ds.responses().iter()) {
        let _ = write!(out, "{y}");
        match row {
            RowView::Dense(x) => {
                for (j, v) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                    let _ = write!(out, " {}:{v}", j + 1);
                }
            }
            RowView::Sparse(idx, val) => {
                for (j, v) in idx.iter().zip(val) {
                    let _ = write!(out, " {}:{v}", j + 1);
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Seeded shuffle, then a contiguous cut into train, validation and test.
/// Validation and test get `⌊n·f⌋` rows; the remainder goes to training.
pub fn split(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let (ft, fv, fs) = fractions;
    if !(ft > 0.0 && fv > 0.0 && fs > 0.0) {
        return Err(Error::InvalidArgument("split fractions must be positive".into()));
    }
    if (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions sum to {}, not 1",
            ft + fv + fs
        )));
    }
    let n = ds.n();
    // the small offset keeps exact products such as 0.29·100 from flooring low
    let n_val = (n as f64 * fv + 1e-9).floor() as usize;
    let n_test = (n as f64 * fs + 1e-9).floor() as usize;
    let n_train = n.saturating_sub(n_val + n_test);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::InvalidArgument(format!(
            "split of {n} rows leaves an empty part ({n_train}/{n_val}/{n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = order.split_at(n_train);
    let (val, test) = rest.split_at(n_val);
    Ok((ds.select(train), ds.select(val), ds.select(test)))
}

pub fn parse_groups(text: &str, dim: usize) -> Result<GroupPartition> {
    let mut groups = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let group: Vec<usize> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(idx + 1, format!("bad index `{t}`")))
            })
            .collect::<Result<_>>()?;
        groups.push(group);
    }
    GroupPartition::new(groups, dim)
}

pub fn load_groups(path: impl AsRef<Path>, dim: usize) -> Result<GroupPartition> {
    parse_groups(&read(path.as_ref())?, dim)
}

pub fn parse_laplacian_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = split_cells(line)
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(idx + 1, format!("bad cell `{c}`")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(idx + 1, "ragged row"));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty("Laplacian file is empty"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(n, flat.len() / n, &flat))
}

pub fn load_laplacian(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_laplacian_csv(&read(path.as_ref())?)
}

/// Loads `path` as sparse text unless it ends in `.csv`.
pub fn load_any(path: impl AsRef<Path>, dims: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let ds = load_dense_csv(path)?;
        match dims {
            Some(d) if d != ds.d() => Err(Error::DimensionMismatch {
                expected: d,
                found: ds.d(),
            }),
            _ => Ok(ds),
        }
    } else {
        load_sparse(path, dims)
    }
}

/// Pads a sparse dataset to dimension `d`.
pub fn widen(ds: Dataset, d: usize) -> Result<Dataset> {
    let kind = ds.kind();
    let responses = ds.responses().clone();
    let features: FeatureMatrix = ds.features().clone().with_dim(d)?;
    Dataset::new(features, responses, kind)
}
