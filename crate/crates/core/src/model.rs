//! The fitted single index predictor and its text serialization.
//!
//! Model files are line oriented, fields in this order:
//!
//! ```text
//! csi-sim-model v1
//! dim <d>
//! shape <rows> <cols>          | shape none
//! standardization none         | standardization
//! means <d values>             (only with standardization)
//! scales <d values>            (only with standardization)
//! weights <d values>
//! knots <m>
//! <knot> <value>               (m lines, knots ascending)
//! end
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same
//! `f64`, so a save/load round trip is bit exact.

use std::fmt::Write as _;

use crate::atoms::MatrixShape;
use crate::data::{Dataset, RowView, Standardization, Vector};
use crate::error::{Error, Result};
use crate::lpav::MonotoneLink;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "csi-sim-model";

#[derive(Debug, Clone, PartialEq)]
pub struct SimModel {
    weights: Vector,
    link: MonotoneLink,
    preprocessing: Option<Standardization>,
    shape: Option<MatrixShape>,
}

impl SimModel {
    pub fn new(weights: Vector, link: MonotoneLink) -> Result<Self> {
        Ok(SimModel {
            weights,
            link,
            preprocessing: None,
            shape: None,
        })
    }

    pub fn with_preprocessing(mut self, stats: Option<Standardization>) -> Result<Self> {
        if let Some(s) = &stats {
            if s.dim() != self.weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.weights.len(),
                    found: s.dim(),
                });
            }
        }
        self.preprocessing = stats;
        Ok(self)
    }

    pub fn with_shape(mut self, shape: Option<MatrixShape>) -> Self {
        self.shape = shape;
        self
    }

    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    pub fn link(&self) -> &MonotoneLink {
        &self.link
    }

    pub fn preprocessing(&self) -> Option<&Standardization> {
        self.preprocessing.as_ref()
    }

    pub fn shape(&self) -> Option<MatrixShape> {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `ŵᵀx̃` where `x̃` is `x` after the stored standardization.
    pub fn index(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(match &self.preprocessing {
            Some(stats) => crate::data::dot(&stats.apply(x)?, &self.weights),
            None => crate::data::dot(x, &self.weights),
        })
    }

    /// `ĝ(ŵᵀx̃)`
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.link.eval(self.index(x)?))
    }

    /// `+1` when the prediction is at or above `threshold`, else `-1`.
    pub fn predict_class(&self, x: &[f64], threshold: f64) -> Result<f64> {
        Ok(classify(self.predict(x)?, threshold))
    }

    fn predict_row(&self, row: RowView<'_>) -> Result<f64> {
        match (&self.preprocessing, row) {
            (None, RowView::Sparse(..)) => Ok(self.link.eval(row.dot(&self.weights))),
            _ => self.predict(&row.to_dense(self.dim())),
        }
    }

    /// Predictions for every row of `ds`.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.d() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: ds.d(),
            });
        }
        ds.features().rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn save(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} v{FORMAT_VERSION}");
        let _ = writeln!(out, "dim {}", self.dim());
        match self.shape {
            Some(s) => {
                let _ = writeln!(out, "shape {} {}", s.rows, s.cols);
            }
            None => out.push_str("shape none\n"),
        }
        match &self.preprocessing {
            Some(stats) => {
                out.push_str("standardization\n");
                write_row(&mut out, "means", &stats.means);
                write_row(&mut out, "scales", &stats.scales);
            }
            None => out.push_str("standardization none\n"),
        }
        write_row(&mut out, "weights", &self.weights);
        let _ = writeln!(out, "knots {}", self.link.len());
        for (k, v) in self.link.knots().iter().zip(self.link.values()) {
            let _ = writeln!(out, "{k} {v}");
        }
        out.push_str("end\n");
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);

        let header = r.line()?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| r.error("not a csi-sim-model file"))?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }

        let dim: usize = r.keyed("dim")?.parse().map_err(|_| r.error("bad dimension"))?;

        let shape = match r.keyed("shape")? {
            "none" => None,
            s => {
                let parts: Vec<usize> = s
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| r.error("bad shape"))?;
                match parts[..] {
                    [rows, cols] if rows * cols == dim => Some(MatrixShape::new(rows, cols)?),
                    _ => return Err(r.error("shape must be two sizes whose product is dim")),
                }
            }
        };

        let preprocessing = match r.line()? {
            "standardization none" => None,
            "standardization" => {
                let means = r.numbers("means", dim)?;
                let scales = r.numbers("scales", dim)?;
                Some(Standardization {
                    means: Vector::new(means).map_err(|e| r.error(&e.to_string()))?,
                    scales: Vector::new(scales).map_err(|e| r.error(&e.to_string()))?,
                })
            }
            _ => return Err(r.error("expected standardization record")),
        };

        let weights = Vector::new(r.numbers("weights", dim)?).map_err(|e| r.error(&e.to_string()))?;
        let m: usize = r.keyed("knots")?.parse().map_err(|_| r.error("bad knot count"))?;
        let mut knots = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for _ in 0..m {
            let line = r.line()?;
            let pair: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| r.error("bad knot"))?;
            match pair[..] {
                [k, v] => {
                    knots.push(k);
                    values.push(v);
                }
                _ => return Err(r.error("knot lines hold two numbers")),
            }
        }
        let link = MonotoneLink::new(knots, values).map_err(|e| r.error(&e.to_string()))?;
        if r.line()? != "end" {
            return Err(r.error("expected end"));
        }
        SimModel::new(weights, link)?
            .with_preprocessing(preprocessing)
            .map(|m| m.with_shape(shape))
    }
}

/// `+1` at or above the threshold, `-1` below.
pub fn classify(score: f64, threshold: f64) -> f64 {
    if score >= threshold {
        1.0
    } else {
        -1.0
    }
}

fn write_row(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn error(&self, reason: &str) -> Error {
        Error::Parse {
            line: self.line_no,
            reason: reason.to_string(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .map(str::trim)
            .ok_or_else(|| self.error("unexpected end of input"))
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => Err(self.error(&format!("expected `{key}` record"))),
        }
    }

    fn numbers(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let line = self.line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(self.error(&format!("expected `{key}` record")));
        }
        let values: Vec<f64> = tokens
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.error(&format!("bad number in `{key}`")))?;
        if values.len() != len {
            return Err(self.error(&format!(
                "`{key}` has {} values, expected {len}",
                values.len()
            )));
        }
        Ok(values)
    }
}
