//! Numeric containers shared by the solver: finite vectors, dense and
//! sparse row-major feature matrices, and labeled datasets.

use std::ops::Deref;

use crate::error::{Error, Result};

/// A real vector whose entries are all finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(Vector(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        check_len(n * d, data.len())?;
        check_finite(&data)?;
        Ok(DenseMatrix { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            check_len(d, row.len())?;
            data.extend_from_slice(row);
        }
        DenseMatrix::new(n, d, data)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Compressed sparse row matrix. Column indices within a row are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    d: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from per-row `(index, value)` lists.
    pub fn from_rows(d: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                if j >= d {
                    return Err(Error::InvalidSparseRow {
                        row: r,
                        reason: format!("index {j} out of range for dimension {d}"),
                    });
                }
                if prev.is_some_and(|p| j <= p) {
                    return Err(Error::InvalidSparseRow {
                        row: r,
                        reason: "indices must be strictly increasing".into(),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidSparseRow {
                        row: r,
                        reason: format!("non-finite value at index {j}"),
                    });
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            n: rows.len(),
            d,
            indptr,
            indices,
            values,
        })
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// A borrowed view of one sample.
#[derive(Debug, Clone, Copy)]
pub enum RowView<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [usize], &'a [f64]),
}

impl RowView<'_> {
    pub fn dot(&self, w: &[f64]) -> f64 {
        match *self {
            RowView::Dense(x) => dot(x, w),
            RowView::Sparse(idx, val) => idx.iter().zip(val).map(|(&j, v)| v * w[j]).sum(),
        }
    }

    /// `out += alpha * row`
    pub fn axpy_into(&self, alpha: f64, out: &mut [f64]) {
        match *self {
            RowView::Dense(x) => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o += alpha * v;
                }
            }
            RowView::Sparse(idx, val) => {
                for (&j, v) in idx.iter().zip(val) {
                    out[j] += alpha * v;
                }
            }
        }
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        match *self {
            RowView::Dense(x) => x.to_vec(),
            RowView::Sparse(idx, val) => {
                let mut out = vec![0.0; d];
                for (&j, &v) in idx.iter().zip(val) {
                    out[j] = v;
                }
                out
            }
        }
    }
}

/// n×d design matrix with one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl FeatureMatrix {
    pub fn n(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.n,
            FeatureMatrix::Sparse(m) => m.n,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.d,
            FeatureMatrix::Sparse(m) => m.d,
        }
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        match self {
            FeatureMatrix::Dense(m) => RowView::Dense(m.row(i)),
            FeatureMatrix::Sparse(m) => {
                let (idx, val) = m.row(i);
                RowView::Sparse(idx, val)
            }
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_>> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    /// Computes `Xw`.
    pub fn matvec(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.d(), w.len())?;
        Ok(self.rows().map(|r| r.dot(w)).collect())
    }

    /// Computes `Xᵀv`, accumulating rows in order.
    pub fn transpose_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), v.len())?;
        let mut out = vec![0.0; self.d()];
        for (row, &alpha) in self.rows().zip(v) {
            if alpha != 0.0 {
                row.axpy_into(alpha, &mut out);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            FeatureMatrix::Dense(m) => m.clone(),
            FeatureMatrix::Sparse(m) => {
                let mut data = vec![0.0; m.n * m.d];
                for i in 0..m.n {
                    let (idx, val) = m.row(i);
                    for (&j, &v) in idx.iter().zip(val) {
                        data[i * m.d + j] = v;
                    }
                }
                DenseMatrix {
                    n: m.n,
                    d: m.d,
                    data,
                }
            }
        }
    }

    /// Number of stored entries (`n·d` for dense storage).
    pub fn nnz(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.data.len(),
            FeatureMatrix::Sparse(m) => m.nnz(),
        }
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Dense(m) => {
                let mut data = Vec::with_capacity(rows.len() * m.d);
                for &i in rows {
                    data.extend_from_slice(m.row(i));
                }
                FeatureMatrix::Dense(DenseMatrix {
                    n: rows.len(),
                    d: m.d,
                    data,
                })
            }
            FeatureMatrix::Sparse(m) => {
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in rows {
                    let (idx, val) = m.row(i);
                    indices.extend_from_slice(idx);
                    values.extend_from_slice(val);
                    indptr.push(indices.len());
                }
                FeatureMatrix::Sparse(SparseMatrix {
                    n: rows.len(),
                    d: m.d,
                    indptr,
                    indices,
                    values,
                })
            }
        }
    }

    /// Widens (or narrows) the feature dimension of a sparse matrix.
    /// Dense matrices only accept their own dimension.
    pub fn with_dim(self, d: usize) -> Result<FeatureMatrix> {
        match self {
            FeatureMatrix::Dense(m) => {
                check_len(m.d, d)?;
                Ok(FeatureMatrix::Dense(m))
            }
            FeatureMatrix::Sparse(mut m) => {
                if let Some(&max) = m.indices.iter().max() {
                    if max >= d {
                        return Err(Error::InvalidArgument(format!(
                            "feature index {} exceeds requested dimension {d}",
                            max + 1
                        )));
                    }
                }
                m.d = d;
                Ok(FeatureMatrix::Sparse(m))
            }
        }
    }
}

impl From<DenseMatrix> for FeatureMatrix {
    fn from(m: DenseMatrix) -> Self {
        FeatureMatrix::Dense(m)
    }
}

impl From<SparseMatrix> for FeatureMatrix {
    fn from(m: SparseMatrix) -> Self {
        FeatureMatrix::Sparse(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Regression,
    BinaryClassification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    responses: Vector,
    kind: TaskKind,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, responses: Vector, kind: TaskKind) -> Result<Self> {
        check_len(features.n(), responses.len())?;
        if kind == TaskKind::BinaryClassification {
            if let Some((row, &value)) = responses
                .iter()
                .enumerate()
                .find(|(_, &y)| y != 1.0 && y != -1.0)
            {
                return Err(Error::InvalidLabel { row, value });
            }
        }
        Ok(Dataset {
            features,
            responses,
            kind,
        })
    }

    /// Classification when every response is ±1, regression otherwise.
    pub fn infer_kind(features: FeatureMatrix, responses: Vector) -> Result<Self> {
        let kind = if !responses.is_empty() && responses.iter().all(|&y| y == 1.0 || y == -1.0) {
            TaskKind::BinaryClassification
        } else {
            TaskKind::Regression
        };
        Dataset::new(features, responses, kind)
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn responses(&self) -> &Vector {
        &self.responses
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn d(&self) -> usize {
        self.features.d()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            responses: Vector(rows.iter().map(|&i| self.responses[i]).collect()),
            kind: self.kind,
        }
    }
}

/// Per-column centering and scaling learned from training data.
///
/// Scales use the population convention (divide by `n`). Zero-variance
/// columns keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vector,
    pub scales: Vector,
}

impl Standardization {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(self.means.iter().zip(self.scales.iter()))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), z.len())?;
        Ok(z.iter()
            .zip(self.means.iter().zip(self.scales.iter()))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    pub fn apply_matrix(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        check_len(self.dim(), m.d())?;
        let d = m.d();
        let mut data = Vec::with_capacity(m.n() * d);
        for row in m.rows() {
            data.extend(self.apply(&row.to_dense(d))?);
        }
        Ok(FeatureMatrix::Dense(DenseMatrix { n: m.n(), d, data }))
    }
}

/// Centers and scales every column to mean 0 and population standard
/// deviation 1. The returned dataset is dense.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = ds.n();
    if n == 0 {
        return Err(Error::Empty("dataset has no rows"));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "standardization needs at least two rows".into(),
        ));
    }
    let d = ds.d();
    let mut means = vec![0.0; d];
    for row in ds.features.rows() {
        row.axpy_into(1.0, &mut means);
    }
    means.iter_mut().for_each(|m| *m /= n as f64);

    let dense = ds.features.to_dense();
    let mut var = vec![0.0; d];
    for i in 0..n {
        for (j, (&x, &m)) in dense.row(i).iter().zip(&means).enumerate() {
            var[j] += (x - m) * (x - m);
        }
    }
    let scales: Vec<f64> = var
        .iter()
        .map(|&v| {
            let sd = (v / n as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();

    let stats = Standardization {
        means: Vector(means),
        scales: Vector(scales),
    };
    let features = stats.apply_matrix(&FeatureMatrix::Dense(dense))?;
    let out = Dataset {
        features,
        responses: ds.responses.clone(),
        kind: ds.kind,
    };
    Ok((out, stats))
}
