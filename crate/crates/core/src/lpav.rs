//! Monotone, 1-Lipschitz univariate regression (LPAV).
//!
//! Given projections `p` and responses `y`, [`lpav_fit`] returns the values
//! `z` minimizing `Σ (z_i - y_i)²` subject to `0 ≤ z_j - z_i ≤ p_j - p_i`
//! whenever `p_i ≤ p_j`, extended to the whole real line by linear
//! interpolation between knots and constant clamping outside them.
//!
//! After sorting, the pairwise constraints telescope into the chain
//! `0 ≤ z_{k+1} - z_k ≤ δ_k` on consecutive distinct knots. The chain
//! problem is solved exactly by dynamic programming over the derivative of
//! the partial value function
//!
//! ```text
//! F_1(z)     = w_1 (z - y_1)²
//! F_{k+1}(z) = w_{k+1} (z - y_{k+1})² + min_{z - δ_k ≤ u ≤ z} F_k(u)
//! ```
//!
//! Each `F_k'` is continuous, piecewise linear and increasing, so the inner
//! minimization splits `F_k'` at its root `m_k`, inserts a zero piece of
//! width `δ_k` and shifts the right half. The solution is recovered
//! backwards by `z_k = clamp(m_k, z_{k+1} - δ_k, z_{k+1})`. Worst case cost
//! is quadratic in the number of distinct knots.

use crate::data::check_finite;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

// Slack allowed when validating constraint satisfaction of stored links.
const VALIDATION_SLACK: f64 = 1e-9;

/// Piecewise-linear, non-decreasing, 1-Lipschitz function defined by knots
/// and fitted values.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneLink {
    knots: Vec<f64>,
    values: Vec<f64>,
    // ∫ g from knots[0] to knots[j]
    integrals: Vec<f64>,
    // ∫ g from knots[0] to 0
    origin_integral: f64,
}

impl MonotoneLink {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidLink("link needs at least one knot".into()));
        }
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                found: values.len(),
            });
        }
        check_finite(&knots)?;
        check_finite(&values)?;
        for i in 1..knots.len() {
            let gap = knots[i] - knots[i - 1];
            if gap <= 0.0 {
                return Err(Error::InvalidLink(format!(
                    "knots not strictly increasing at {i}"
                )));
            }
            let rise = values[i] - values[i - 1];
            let scale = 1.0 + values[i].abs().max(values[i - 1].abs());
            if rise < -VALIDATION_SLACK * scale {
                return Err(Error::InvalidLink(format!("values decrease at {i}")));
            }
            if rise > gap + VALIDATION_SLACK * scale {
                return Err(Error::InvalidLink(format!(
                    "slope exceeds 1 between knots {} and {i}",
                    i - 1
                )));
            }
        }
        let mut integrals = Vec::with_capacity(knots.len());
        integrals.push(0.0);
        for i in 1..knots.len() {
            let area = 0.5 * (knots[i] - knots[i - 1]) * (values[i] + values[i - 1]);
            integrals.push(integrals[i - 1] + area);
        }
        let mut link = MonotoneLink {
            knots,
            values,
            integrals,
            origin_integral: 0.0,
        };
        link.origin_integral = link.integral_from_first(0.0);
        Ok(link)
    }

    /// The constant function `value`.
    pub fn constant(value: f64) -> Result<Self> {
        MonotoneLink::new(vec![0.0], vec![value])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Evaluates the link: constant outside `[knots[0], knots[m-1]]`, linear
    /// between neighbouring knots.
    pub fn eval(&self, zeta: f64) -> f64 {
        let m = self.knots.len();
        let idx = self.knots.partition_point(|&k| k <= zeta);
        if idx == 0 {
            self.values[0]
        } else if idx == m {
            self.values[m - 1]
        } else {
            let (k0, k1) = (self.knots[idx - 1], self.knots[idx]);
            let (v0, v1) = (self.values[idx - 1], self.values[idx]);
            v0 + (zeta - k0) / (k1 - k0) * (v1 - v0)
        }
    }

    fn integral_from_first(&self, t: f64) -> f64 {
        let m = self.knots.len();
        let idx = self.knots.partition_point(|&k| k <= t);
        if idx == 0 {
            self.values[0] * (t - self.knots[0])
        } else if idx == m {
            self.integrals[m - 1] + self.values[m - 1] * (t - self.knots[m - 1])
        } else {
            let j = idx - 1;
            let h = t - self.knots[j];
            let slope = (self.values[idx] - self.values[j]) / (self.knots[idx] - self.knots[j]);
            self.integrals[j] + h * self.values[j] + 0.5 * slope * h * h
        }
    }

    /// Antiderivative `Φ(t) = ∫₀ᵗ g`, so `Φ(0) = 0`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.integral_from_first(t) - self.origin_integral
    }
}

/// Sorted, tie-merged LPAV inputs.
struct Merged {
    knots: Vec<f64>,
    weights: Vec<f64>,
    targets: Vec<f64>,
}

fn merge_ties(p: &[f64], y: &[f64]) -> Merged {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut knots: Vec<f64> = Vec::with_capacity(p.len());
    let mut weights: Vec<f64> = Vec::with_capacity(p.len());
    let mut sums: Vec<f64> = Vec::with_capacity(p.len());
    for i in order {
        match knots.last() {
            Some(&k) if k == p[i] => {
                *weights.last_mut().unwrap() += 1.0;
                *sums.last_mut().unwrap() += y[i];
            }
            _ => {
                knots.push(p[i]);
                weights.push(1.0);
                sums.push(y[i]);
            }
        }
    }
    let targets = sums.iter().zip(&weights).map(|(s, w)| s / w).collect();
    Merged {
        knots,
        weights,
        targets,
    }
}

/// One linear piece `a·z + c` of a derivative, valid from `start` up to the
/// next piece's start.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    slope: f64,
    intercept: f64,
}

fn root(pieces: &[Piece]) -> (usize, f64) {
    for (j, piece) in pieces.iter().enumerate() {
        let end = pieces.get(j + 1).map_or(f64::INFINITY, |q| q.start);
        if end.is_infinite() || piece.slope * end + piece.intercept >= 0.0 {
            let r = -piece.intercept / piece.slope;
            return (j, r.clamp(piece.start, end));
        }
    }
    unreachable!("derivative is increasing and unbounded")
}

/// Solves the chain problem on sorted distinct knots.
fn solve_chain(weights: &[f64], targets: &[f64], gaps: &[f64]) -> Vec<f64> {
    let m = targets.len();
    let mut pieces = vec![Piece {
        start: f64::NEG_INFINITY,
        slope: 2.0 * weights[0],
        intercept: -2.0 * weights[0] * targets[0],
    }];
    let mut scratch: Vec<Piece> = Vec::new();
    let mut minimizers = Vec::with_capacity(m);

    for k in 1..m {
        let (j, r) = root(&pieces);
        minimizers.push(r);
        let delta = gaps[k - 1];

        scratch.clear();
        scratch.extend_from_slice(&pieces[..=j]);
        scratch.push(Piece {
            start: r,
            slope: 0.0,
            intercept: 0.0,
        });
        // The piece containing the root continues to the right of the flat
        // section, shifted by delta.
        let shifted = std::iter::once(Piece {
            start: r,
            ..pieces[j]
        })
        .chain(pieces[j + 1..].iter().copied())
        .map(|q| Piece {
            start: q.start + delta,
            slope: q.slope,
            intercept: q.intercept - q.slope * delta,
        });
        scratch.extend(shifted);
        std::mem::swap(&mut pieces, &mut scratch);

        let (w, y) = (weights[k], targets[k]);
        for q in pieces.iter_mut() {
            q.slope += 2.0 * w;
            q.intercept -= 2.0 * w * y;
        }
    }
    minimizers.push(root(&pieces).1);

    let mut z = vec![0.0; m];
    z[m - 1] = minimizers[m - 1];
    for k in (0..m - 1).rev() {
        z[k] = minimizers[k].max(z[k + 1] - gaps[k]).min(z[k + 1]);
    }
    z
}

/// Largest violation of primal feasibility or complementary slackness for
/// the chain problem, in units of the responses.
fn kkt_residual(m: &Merged, z: &[f64]) -> f64 {
    let total: f64 = m.weights.iter().sum();
    let scale = 1.0 + m.targets.iter().fold(0.0_f64, |a, y| a.max(y.abs()));
    let mut worst = 0.0_f64;
    let mut multiplier = 0.0;
    for k in 0..z.len() {
        multiplier += m.weights[k] * (z[k] - m.targets[k]);
        let nu = multiplier / total;
        if k + 1 == z.len() {
            worst = worst.max(nu.abs());
            break;
        }
        let gap = m.knots[k + 1] - m.knots[k];
        let rise = z[k + 1] - z[k];
        worst = worst.max(-rise).max(rise - gap);
        if nu > 0.0 {
            worst = worst.max(nu.min(gap - rise));
        } else if nu < 0.0 {
            worst = worst.max((-nu).min(rise));
        }
    }
    worst / scale
}

/// Fits the best monotone 1-Lipschitz function to `(p_i, y_i)` in squared
/// error. Tied projections become one knot carrying the mean response.
pub fn lpav_fit(p: &[f64], y: &[f64], tol: f64) -> Result<MonotoneLink> {
    if p.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: y.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::Empty("LPAV needs at least one point"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "LPAV tolerance must be positive, got {tol}"
        )));
    }
    check_finite(p)?;
    check_finite(y)?;

    let merged = merge_ties(p, y);
    if merged.knots.len() == 1 {
        return MonotoneLink::new(merged.knots, merged.targets);
    }
    let gaps: Vec<f64> = merged.knots.windows(2).map(|w| w[1] - w[0]).collect();
    let z = solve_chain(&merged.weights, &merged.targets, &gaps);
    let residual = kkt_residual(&merged, &z);
    if residual > tol {
        return Err(Error::LpavNotConverged { residual, tol });
    }
    MonotoneLink::new(merged.knots, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn feasible_input_is_its_own_fit() {
        let g = lpav_fit(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0], DEFAULT_TOL).unwrap();
        assert!(close(g.values(), &[0.0, 0.5, 1.0], 1e-12));
    }

    #[test]
    fn monotonicity_active() {
        let g = lpav_fit(&[0.0, 1.0], &[1.0, 0.0], DEFAULT_TOL).unwrap();
        assert!(close(g.values(), &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn lipschitz_active() {
        let g = lpav_fit(&[0.0, 1.0], &[0.0, 2.0], DEFAULT_TOL).unwrap();
        assert!(close(g.values(), &[0.5, 1.5], 1e-12));
    }

    #[test]
    fn ties_merge_into_one_knot() {
        let g = lpav_fit(&[0.0, 0.0, 1.0], &[0.0, 2.0, 1.0], DEFAULT_TOL).unwrap();
        assert_eq!(g.knots(), &[0.0, 1.0]);
        assert!(close(g.values(), &[1.0, 1.0], 1e-12));
    }

    #[test]
    fn unsorted_input() {
        let g = lpav_fit(&[1.0, 0.0], &[0.0, 1.0], DEFAULT_TOL).unwrap();
        assert_eq!(g.knots(), &[0.0, 1.0]);
        assert!(close(g.values(), &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn single_point_is_constant() {
        let g = lpav_fit(&[3.0], &[-0.25], DEFAULT_TOL).unwrap();
        assert_eq!(g.eval(-100.0), -0.25);
        assert_eq!(g.eval(100.0), -0.25);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            lpav_fit(&[0.0], &[1.0, 2.0], DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lpav_fit(&[], &[], DEFAULT_TOL),
            Err(Error::Empty(_))
        ));
        assert!(lpav_fit(&[0.0], &[1.0], 0.0).is_err());
        assert!(lpav_fit(&[f64::NAN], &[1.0], DEFAULT_TOL).is_err());
    }

    #[test]
    fn eval_interpolates_and_clamps() {
        let g = MonotoneLink::new(vec![0.0, 2.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(g.eval(1.0), 0.5);
        assert_eq!(g.eval(-5.0), 0.0);
        assert_eq!(g.eval(10.0), 1.0);
        assert_eq!(g.eval(2.0), 1.0);
    }

    #[test]
    fn link_validation() {
        assert!(MonotoneLink::new(vec![], vec![]).is_err());
        assert!(MonotoneLink::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(MonotoneLink::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(MonotoneLink::new(vec![0.0, 1.0], vec![0.0, 2.0]).is_err());
    }

    #[test]
    fn antiderivative_closed_form() {
        let g = MonotoneLink::new(vec![-1.0, 1.0], vec![-1.0, 1.0]).unwrap();
        assert!((g.antiderivative(1.0) - 0.5).abs() < 1e-15);
        assert!((g.antiderivative(-1.0) - 0.5).abs() < 1e-15);
        assert_eq!(g.antiderivative(0.0), 0.0);
        // beyond the last knot g is constant 1
        assert!((g.antiderivative(3.0) - 2.5).abs() < 1e-15);
        assert!((g.antiderivative(-3.0) - 2.5).abs() < 1e-15);
    }
}
