//! Evaluation measures: ROC AUC, F1, accuracy and mean squared error.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Auc,
    F1,
    Mse,
    Accuracy,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::F1 => "f1",
            Metric::Mse => "mse",
            Metric::Accuracy => "acc",
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Metric::Mse)
    }

    /// Scores `predictions` (real scores for AUC and MSE, ±1 classes for F1
    /// and accuracy) against `labels`.
    pub fn evaluate(&self, predictions: &[f64], labels: &[f64]) -> Result<EvalResult> {
        let value = match self {
            Metric::Auc => auc(predictions, labels)?,
            Metric::F1 => f1(predictions, labels)?,
            Metric::Mse => mse(predictions, labels)?,
            Metric::Accuracy => accuracy(predictions, labels)?,
        };
        Ok(EvalResult {
            metric: *self,
            value,
            n: labels.len(),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auc" => Ok(Metric::Auc),
            "f1" => Ok(Metric::F1),
            "mse" => Ok(Metric::Mse),
            "acc" | "accuracy" => Ok(Metric::Accuracy),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub metric: Metric,
    pub value: f64,
    pub n: usize,
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

fn check_labels(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|&y| y != 1.0 && y != -1.0) {
        Some(row) => Err(Error::InvalidLabel {
            row,
            value: labels[row],
        }),
        None => Ok(()),
    }
}

/// Mann–Whitney estimate of `P(score⁺ > score⁻) + ½·P(tie)`.
///
/// Ranks are computed by sorting; tied scores share their average rank.
/// All bookkeeping is done in doubled integer ranks so the result equals
/// exhaustive pair counting exactly.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    same_len(scores, labels)?;
    check_labels(labels)?;
    crate::data::check_finite(scores)?;
    let pos = labels.iter().filter(|&&y| y > 0.0).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum over positives of twice their (1-based, tie-averaged) rank
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let doubled_rank = (start + 1 + end + 1) as u128;
        let positives = order[start..=end]
            .iter()
            .filter(|&&i| labels[i] > 0.0)
            .count() as u128;
        doubled_rank_sum += positives * doubled_rank;
        start = end + 1;
    }
    let doubled_u = doubled_rank_sum - pos * (pos + 1);
    Ok(doubled_u as f64 / (2 * pos * neg) as f64)
}

/// F1 of the `+1` class; zero when precision and recall are both zero.
pub fn f1(pred: &[f64], labels: &[f64]) -> Result<f64> {
    same_len(pred, labels)?;
    check_labels(pred)?;
    check_labels(labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    for (&p, &y) in pred.iter().zip(labels) {
        match (p > 0.0, y > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    // 2PR/(P+R) simplifies to 2tp/(2tp+fp+fn)
    let denom = 2 * tp + fp + fneg;
    Ok(if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    })
}

/// Unweighted mean of per-label F1 scores.
pub fn macro_f1(tasks: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if tasks.is_empty() {
        return Err(Error::Empty("no labels to average"));
    }
    let mut total = 0.0;
    for (pred, labels) in tasks {
        total += f1(pred, labels)?;
    }
    Ok(total / tasks.len() as f64)
}

pub fn mse(pred: &[f64], labels: &[f64]) -> Result<f64> {
    same_len(pred, labels)?;
    if pred.is_empty() {
        return Err(Error::Empty("MSE of zero samples"));
    }
    let sum: f64 = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / pred.len() as f64)
}

pub fn accuracy(pred: &[f64], labels: &[f64]) -> Result<f64> {
    same_len(pred, labels)?;
    if pred.is_empty() {
        return Err(Error::Empty("accuracy of zero samples"));
    }
    let correct = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / pred.len() as f64)
}
