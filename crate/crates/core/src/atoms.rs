//! Atomic projections: truncate a parameter vector to its `s` dominant atoms.
//!
//! Four atom families are supported:
//!
//! * signed canonical basis vectors (hard thresholding),
//! * disjoint coordinate groups (group hard thresholding),
//! * unit-rank matrices (best rank-`s` approximation of the reshaped vector),
//! * unit-rank matrices weighted by row and column graph Laplacians.
//!
//! Matrix parameters are stored row-major: entry `(i, j)` of an `r×c`
//! matrix lives at index `i·c + j`.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen, QR, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixShape {
    pub rows: usize,
    pub cols: usize,
}

impl MatrixShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} has a zero side"
            )));
        }
        Ok(MatrixShape { rows, cols })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_matrix(&self, w: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, w)
    }

    pub fn to_vec(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(m[(i, j)]);
            }
        }
        out
    }
}

/// Settings for the block subspace iteration behind rank truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub oversample: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            max_iters: 200,
            tol: 1e-10,
            seed: 0x5eed,
            oversample: 2,
        }
    }
}

/// A partition of `{0, …, d-1}` into disjoint groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    dim: usize,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidGroups(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= dim {
                    return Err(Error::InvalidGroups(format!(
                        "index {i} in group {g} is out of range for dimension {dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidGroups(format!(
                        "index {i} appears in more than one group"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidGroups(format!(
                "index {i} is not covered by any group"
            )));
        }
        Ok(GroupPartition { groups, dim })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn norms(&self, w: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt())
            .collect()
    }
}

/// Eigen-factors of a regularized graph Laplacian `L + εI = U diag(S) Uᵀ`,
/// eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianFactor {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl LaplacianFactor {
    pub fn new(laplacian: &DMatrix<f64>, epsilon: f64) -> Result<Self> {
        let n = laplacian.nrows();
        if n == 0 || laplacian.ncols() != n {
            return Err(Error::InvalidLaplacian(format!(
                "expected a non-empty square matrix, got {}x{}",
                n,
                laplacian.ncols()
            )));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidLaplacian(format!(
                "epsilon must be strictly positive, got {epsilon} (L + εI would be singular)"
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if (laplacian[(i, j)] - laplacian[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidLaplacian(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(laplacian.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .total_cmp(&eig.eigenvalues[b])
                .then(a.cmp(&b))
        });
        if eig.eigenvalues[order[0]] < -1e-10 {
            return Err(Error::InvalidLaplacian(format!(
                "not positive semidefinite (eigenvalue {:e})",
                eig.eigenvalues[order[0]]
            )));
        }
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = DVector::zeros(n);
        for (k, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            orient(col.as_mut_slice());
            vectors.set_column(k, &col);
            values[k] = eig.eigenvalues[src].max(0.0) + epsilon;
        }
        Ok(LaplacianFactor { vectors, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Row and column Laplacian factors for graph-weighted rank truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFactors {
    pub rows: LaplacianFactor,
    pub cols: LaplacianFactor,
}

impl GraphFactors {
    /// `Z = S_u^{1/2} U_uᵀ W U_v S_v^{1/2}`
    pub fn forward(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let su = self.rows.values.map(f64::sqrt);
        let sv = self.cols.values.map(f64::sqrt);
        let mut z = self.rows.vectors.transpose() * w * &self.cols.vectors;
        scale_rows_cols(&mut z, &su, &sv);
        z
    }

    /// `W = U_u S_u^{-1/2} Z S_v^{-1/2} U_vᵀ`
    pub fn inverse(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let su = self.rows.values.map(|v| 1.0 / v.sqrt());
        let sv = self.cols.values.map(|v| 1.0 / v.sqrt());
        let mut z = z.clone();
        scale_rows_cols(&mut z, &su, &sv);
        &self.rows.vectors * z * self.cols.vectors.transpose()
    }
}

fn scale_rows_cols(z: &mut DMatrix<f64>, rows: &DVector<f64>, cols: &DVector<f64>) {
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            z[(i, j)] *= rows[i] * cols[j];
        }
    }
}

/// Eigen-factors both Laplacians after adding `epsilon` to their spectra.
pub fn build_graph_factors(
    row_laplacian: &DMatrix<f64>,
    col_laplacian: &DMatrix<f64>,
    epsilon: f64,
) -> Result<GraphFactors> {
    Ok(GraphFactors {
        rows: LaplacianFactor::new(row_laplacian, epsilon)?,
        cols: LaplacianFactor::new(col_laplacian, epsilon)?,
    })
}

/// Flips `v` so its first non-negligible component is positive.
fn orient(v: &mut [f64]) -> bool {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            return true;
        }
    }
    false
}

/// Leading `s` singular triplets, descending, each left vector oriented so
/// its first non-negligible entry is positive.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    /// `‖W V - U Σ‖_F`, zero when the triplets are exact. (The other side,
    /// `WᵀU - VΣ`, vanishes for any Ritz pair taken from a left basis.)
    fn residual(&self, w: &DMatrix<f64>) -> f64 {
        let mut us = self.u.clone();
        for (k, s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        (w * &self.v - us).norm()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    QR::new(m).q()
}

/// Block subspace iteration for the top `s` singular triplets of `w`.
pub fn truncated_svd(w: &DMatrix<f64>, s: usize, power: &PowerIteration) -> TruncatedSvd {
    let (r, c) = w.shape();
    let q = r.min(c);
    let s = s.min(q);
    let block = (s + power.oversample).min(q);

    let mut rng = ChaCha8Rng::seed_from_u64(power.seed);
    let omega = DMatrix::from_fn(c, block, |_, _| StandardNormal.sample(&mut rng));
    let scale = w.norm();
    let mut basis = orthonormalize(w * omega);

    let mut best = ritz(w, &basis, s);
    if scale == 0.0 {
        return best;
    }
    for _ in 0..power.max_iters {
        if best.residual(w) <= power.tol * scale {
            break;
        }
        let right = orthonormalize(w.transpose() * &basis);
        basis = orthonormalize(w * right);
        best = ritz(w, &basis, s);
    }
    best
}

/// Rayleigh–Ritz extraction of the top `s` triplets from the column span of
/// `basis`.
fn ritz(w: &DMatrix<f64>, basis: &DMatrix<f64>, s: usize) -> TruncatedSvd {
    let small = basis.transpose() * w;
    let svd = SVD::new(small, true, true);
    let (ub, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(w.nrows(), s);
    let mut v = DMatrix::zeros(w.ncols(), s);
    let mut sigma = Vec::with_capacity(s);
    for (k, &src) in order.iter().take(s).enumerate() {
        let mut uk = basis * ub.column(src);
        let mut vk = vt.row(src).transpose();
        if orient(uk.as_mut_slice()) {
            vk.neg_mut();
        }
        u.set_column(k, &uk);
        v.set_column(k, &vk);
        sigma.push(svd.singular_values[src]);
    }
    TruncatedSvd { u, sigma, v }
}

/// The atom family of a projector.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Sparse,
    Group(GroupPartition),
    LowRank {
        shape: MatrixShape,
        power: PowerIteration,
    },
    GraphLowRank {
        shape: MatrixShape,
        factors: GraphFactors,
        power: PowerIteration,
    },
}

/// Projection onto vectors with at most `s` atoms of a given family.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicProjector {
    structure: Structure,
    s: usize,
    dim: usize,
}

impl AtomicProjector {
    pub fn sparse(dim: usize, s: usize) -> Result<Self> {
        Self::build(Structure::Sparse, s, dim)
    }

    pub fn group(groups: GroupPartition, s: usize) -> Result<Self> {
        let dim = groups.dim();
        Self::build(Structure::Group(groups), s, dim)
    }

    pub fn low_rank(shape: MatrixShape, s: usize) -> Result<Self> {
        Self::build(
            Structure::LowRank {
                shape,
                power: PowerIteration::default(),
            },
            s,
            shape.len(),
        )
    }

    pub fn graph_low_rank(shape: MatrixShape, factors: GraphFactors, s: usize) -> Result<Self> {
        if factors.rows.dim() != shape.rows || factors.cols.dim() != shape.cols {
            return Err(Error::InvalidLaplacian(format!(
                "Laplacians are {}x{} and {}x{} but the parameter matrix is {}x{}",
                factors.rows.dim(),
                factors.rows.dim(),
                factors.cols.dim(),
                factors.cols.dim(),
                shape.rows,
                shape.cols
            )));
        }
        Self::build(
            Structure::GraphLowRank {
                shape,
                factors,
                power: PowerIteration::default(),
            },
            s,
            shape.len(),
        )
    }

    fn build(structure: Structure, s: usize, dim: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("atom budget s must be at least 1".into()));
        }
        Ok(AtomicProjector { structure, s, dim })
    }

    /// Replaces the power-iteration settings of the matrix variants.
    pub fn with_power(mut self, settings: PowerIteration) -> Self {
        match &mut self.structure {
            Structure::LowRank { power, .. } | Structure::GraphLowRank { power, .. } => {
                *power = settings
            }
            _ => {}
        }
        self
    }

    pub fn with_budget(mut self, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("atom budget s must be at least 1".into()));
        }
        self.s = s;
        Ok(self)
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn budget(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> Option<MatrixShape> {
        match &self.structure {
            Structure::LowRank { shape, .. } | Structure::GraphLowRank { shape, .. } => {
                Some(*shape)
            }
            _ => None,
        }
    }

    /// Number of atoms the family offers at this dimension.
    pub fn available_atoms(&self) -> usize {
        match &self.structure {
            Structure::Sparse => self.dim,
            Structure::Group(g) => g.groups().len(),
            Structure::LowRank { shape, .. } | Structure::GraphLowRank { shape, .. } => {
                shape.rows.min(shape.cols)
            }
        }
    }

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: w.len(),
            });
        }
        Ok(())
    }

    /// Best `s`-atom approximation of `w`. A budget larger than the number of
    /// available atoms returns `w` unchanged and logs a warning.
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        if self.s > self.available_atoms() {
            warn!(
                "atom budget {} exceeds the {} available atoms; projection is the identity",
                self.s,
                self.available_atoms()
            );
            return Ok(w.to_vec());
        }
        Ok(self.project_unchecked(w))
    }

    pub(crate) fn project_unchecked(&self, w: &[f64]) -> Vec<f64> {
        if self.s >= self.available_atoms() {
            return w.to_vec();
        }
        match &self.structure {
            Structure::Sparse => {
                let scores: Vec<f64> = w.iter().map(|x| x.abs()).collect();
                let mut out = vec![0.0; w.len()];
                for i in top_indices(&scores, self.s) {
                    out[i] = w[i];
                }
                out
            }
            Structure::Group(groups) => {
                let norms = groups.norms(w);
                let mut out = vec![0.0; w.len()];
                for g in top_indices(&norms, self.s) {
                    for &i in &groups.groups()[g] {
                        out[i] = w[i];
                    }
                }
                out
            }
            Structure::LowRank { shape, power } => {
                let m = shape.to_matrix(w);
                shape.to_vec(&truncated_svd(&m, self.s, power).reconstruct())
            }
            Structure::GraphLowRank {
                shape,
                factors,
                power,
            } => {
                let z = factors.forward(&shape.to_matrix(w));
                let zs = truncated_svd(&z, self.s, power).reconstruct();
                shape.to_vec(&factors.inverse(&zs))
            }
        }
    }

    /// Counts atoms with coefficient above `tol` in the family's canonical
    /// decomposition: nonzeros, nonzero groups, or numerical rank. This is an
    /// upper bound on the atomic cardinality and exact for the sparse and
    /// group families.
    pub fn atomic_cardinality_upper(&self, w: &[f64], tol: f64) -> Result<usize> {
        self.check_dim(w)?;
        Ok(match &self.structure {
            Structure::Sparse => w.iter().filter(|x| x.abs() > tol).count(),
            Structure::Group(groups) => groups.norms(w).iter().filter(|&&n| n > tol).count(),
            Structure::LowRank { shape, .. } => numerical_rank(shape.to_matrix(w), tol),
            Structure::GraphLowRank { shape, factors, .. } => {
                numerical_rank(factors.forward(&shape.to_matrix(w)), tol)
            }
        })
    }
}

fn numerical_rank(m: DMatrix<f64>, tol: f64) -> usize {
    SVD::new(m, false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Indices of the `s` largest scores; ties go to the lower index.
fn top_indices(scores: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if s < idx.len() {
        idx.select_nth_unstable_by(s, cmp);
        idx.truncate(s);
    }
    idx.sort_by(cmp);
    idx
}
