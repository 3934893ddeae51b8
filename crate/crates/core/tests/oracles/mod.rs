//! Slow, independent reference implementations used by the property tests
//! and the acceptance suite. None of these call into the routines they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Dense QP for the monotone 1-Lipschitz fit with every pairwise constraint
/// written out:
///
/// minimise `Σ (z_i - y_i)²` subject to `0 ≤ z_j - z_i ≤ p_j - p_i` for all
/// `p_i ≤ p_j`.
///
/// Solved by accelerated projected gradient on the dual (the dual feasible
/// set is the nonnegative orthant, so projection is a clamp), restarting on
/// non-monotone progress, until the primal iterate violates no constraint by
/// more than `1e-11` and the duality gap is below `1e-9`.
pub fn lpav_qp(p: &[f64], y: &[f64]) -> Vec<f64> {
    let n = p.len();
    // rows of A: each constraint is a·z ≤ b
    let mut rows: Vec<(usize, usize, f64)> = Vec::new(); // (plus, minus, b): z_plus - z_minus ≤ b
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if p[i] < p[j] || (p[i] == p[j] && i < j) {
                // z_i - z_j ≤ 0
                rows.push((i, j, 0.0));
                // z_j - z_i ≤ p_j - p_i
                rows.push((j, i, p[j] - p[i]));
            }
        }
    }
    let m = rows.len();
    if m == 0 {
        return y.to_vec();
    }
    let primal = |mu: &[f64]| -> Vec<f64> {
        // z = y - ½ Aᵀμ
        let mut z = y.to_vec();
        for (k, &(a, b, _)) in rows.iter().enumerate() {
            z[a] -= 0.5 * mu[k];
            z[b] += 0.5 * mu[k];
        }
        z
    };
    let dual_value = |mu: &[f64], z: &[f64]| -> f64 {
        let mut v: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        for (k, &(a, b, rhs)) in rows.iter().enumerate() {
            v += mu[k] * (z[a] - z[b] - rhs);
        }
        v
    };
    let max_degree = 4 * (n - 1);
    let step = 2.0 / (max_degree as f64); // 1/L with L = ½‖A‖² ≤ ½·2·deg
    let mut mu = vec![0.0; m];
    let mut mu_prev = mu.clone();
    let mut momentum = 1.0_f64;
    let mut best_dual = f64::NEG_INFINITY;
    for _ in 0..2_000_000 {
        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / momentum_next;
        let look: Vec<f64> = mu
            .iter()
            .zip(&mu_prev)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        let z = primal(&look);
        let next: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(k, &(a, b, rhs))| (look[k] + step * (z[a] - z[b] - rhs)).max(0.0))
            .collect();
        mu_prev = std::mem::replace(&mut mu, next);
        momentum = momentum_next;

        let z = primal(&mu);
        let dual = dual_value(&mu, &z);
        if dual < best_dual {
            momentum = 1.0;
            mu_prev = mu.clone();
        }
        best_dual = best_dual.max(dual);
        let violation = rows
            .iter()
            .map(|&(a, b, rhs)| z[a] - z[b] - rhs)
            .fold(0.0_f64, f64::max);
        let objective: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if violation < 1e-11 && (objective - dual).abs() < 1e-9 {
            return z;
        }
    }
    panic!("dense QP oracle did not converge");
}

pub fn squared_error(z: &[f64], y: &[f64]) -> f64 {
    z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Largest violation of `0 ≤ z_j - z_i ≤ p_j - p_i` over all pairs with
/// `p_i ≤ p_j`.
pub fn pairwise_violation(p: &[f64], z: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..p.len() {
        for j in 0..p.len() {
            if p[i] <= p[j] {
                let diff = z[j] - z[i];
                worst = worst.max(-diff).max(diff - (p[j] - p[i]));
            }
        }
    }
    worst
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Best `s`-sparse approximation by trying every support.
pub fn sparse_by_enumeration(w: &[f64], s: usize) -> Vec<f64> {
    let s = s.min(w.len());
    subsets(w.len(), s)
        .into_iter()
        .map(|support| {
            let mut v = vec![0.0; w.len()];
            for j in support {
                v[j] = w[j];
            }
            v
        })
        .min_by(|a, b| distance(a, w).total_cmp(&distance(b, w)))
        .unwrap()
}

/// Best approximation using at most `s` of the given disjoint groups.
pub fn group_by_enumeration(w: &[f64], groups: &[Vec<usize>], s: usize) -> Vec<f64> {
    let s = s.min(groups.len());
    subsets(groups.len(), s)
        .into_iter()
        .map(|chosen| {
            let mut v = vec![0.0; w.len()];
            for g in chosen {
                for &j in &groups[g] {
                    v[j] = w[j];
                }
            }
            v
        })
        .min_by(|a, b| distance(a, w).total_cmp(&distance(b, w)))
        .unwrap()
}

/// Rank-`s` truncation of a full SVD.
pub fn svd_truncate(m: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for &k in order.iter().take(s) {
        out += svd.singular_values[k] * u.column(k) * vt.row(k);
    }
    out
}

/// `(S^{1/2} Uᵀ, U S^{-1/2})` for `L + εI`, computed independently of the
/// crate's factorisation.
pub fn laplacian_maps(l: &DMatrix<f64>, eps: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(l.clone());
    let u = eig.eigenvectors;
    let s: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0) + eps).collect();
    let half = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        s.len(),
        s.iter().map(|v| v.sqrt()),
    ));
    let inv_half = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        s.len(),
        s.iter().map(|v| 1.0 / v.sqrt()),
    ));
    (&half * u.transpose(), &u * inv_half)
}

/// Graph-weighted rank-`s` projection of `W` (row-major `rows×cols`).
pub fn graph_truncate(
    w: &DMatrix<f64>,
    row_l: &DMatrix<f64>,
    col_l: &DMatrix<f64>,
    eps: f64,
    s: usize,
) -> DMatrix<f64> {
    let (fr, ir) = laplacian_maps(row_l, eps);
    let (fc, ic) = laplacian_maps(col_l, eps);
    let z = &fr * w * fc.transpose();
    let zs = svd_truncate(&z, s);
    &ir * zs * ic.transpose()
}

/// Random graph Laplacian `D - A` with weights in `[0, 1)`.
pub fn random_laplacian(n: usize, mut uniform: impl FnMut() -> f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = uniform();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut l = -a.clone();
    for i in 0..n {
        l[(i, i)] = a.row(i).sum();
    }
    l
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counted
/// as one half, by looping over every pair.
pub fn auc_by_pairs(scores: &[f64], labels: &[f64]) -> f64 {
    let mut doubled = 0u64;
    let mut pairs = 0u64;
    for (i, &yi) in labels.iter().enumerate() {
        if yi <= 0.0 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj > 0.0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                doubled += 2;
            } else if scores[i] == scores[j] {
                doubled += 1;
            }
        }
    }
    doubled as f64 / (2 * pairs) as f64
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Central difference of `f` along coordinate `j`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], j: usize, h: f64) -> f64 {
    let mut plus = w.to_vec();
    let mut minus = w.to_vec();
    plus[j] += h;
    minus[j] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}
