use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use csi_core::atoms::{build_graph_factors, PowerIteration};
use csi_core::io;
use csi_core::{AtomicProjector, Dataset, KnownLink, LinkMode, MatrixShape, Metric, TaskKind};

use crate::args::{Atoms, DataArgs, Format, LinkArg, StructureArgs};
use crate::manifest::RunManifest;

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Bad or inconsistent flags; reported with exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn is_csv(path: &Path, format: Format) -> bool {
    match format {
        Format::Csv => true,
        Format::Sparse => false,
        Format::Auto => path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    }
}

/// Loads `--data`. Sparse input takes its dimension from `--dims`, else
/// `fallback_dims`, else the largest index present.
pub fn load_data(args: &DataArgs, fallback_dims: Option<usize>) -> Result<Dataset> {
    let path = &args.data;
    let ds = if is_csv(path, args.format) {
        let ds = io::load_dense_csv(path)?;
        if let Some(d) = args.dims.filter(|&d| d != ds.d()) {
            return Err(usage(format!(
                "--dims {d} does not match the {} feature columns of {}",
                ds.d(),
                path.display()
            )));
        }
        ds
    } else {
        io::load_sparse(path, args.dims.or(fallback_dims))?
    };
    Ok(ds)
}

pub fn record_data(m: &mut RunManifest, args: &DataArgs) -> Result<()> {
    m.input("data", &args.data)?;
    m.set("format", format!("{:?}", args.format).to_lowercase());
    m.set("dims", args.dims);
    Ok(())
}

pub fn parse_shape(s: &str) -> Result<MatrixShape> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("--shape `{s}` is not of the form RxC")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("--shape `{s}` is not of the form RxC")))
    };
    Ok(MatrixShape::new(parse(r)?, parse(c)?)?)
}

/// Checks that exactly the flags the chosen atom family needs are present.
pub fn check_structure(a: &StructureArgs) -> Result<()> {
    let need = |present: bool, flag: &str| {
        if present {
            Ok(())
        } else {
            Err(usage(format!("--atoms {} requires {flag}", atoms_name(a.atoms))))
        }
    };
    let forbid = |present: bool, flag: &str| {
        if present {
            Err(usage(format!("{flag} does not apply to --atoms {}", atoms_name(a.atoms))))
        } else {
            Ok(())
        }
    };
    let graph = a.row_laplacian.is_some() || a.col_laplacian.is_some() || a.epsilon.is_some();
    match a.atoms {
        Atoms::Sparse => {
            forbid(a.groups.is_some(), "--groups")?;
            forbid(a.shape.is_some(), "--shape")?;
            forbid(graph, "--row-laplacian/--col-laplacian/--epsilon")?;
        }
        Atoms::Group => {
            need(a.groups.is_some(), "--groups")?;
            forbid(a.shape.is_some(), "--shape")?;
            forbid(graph, "--row-laplacian/--col-laplacian/--epsilon")?;
        }
        Atoms::Lowrank => {
            need(a.shape.is_some(), "--shape")?;
            forbid(a.groups.is_some(), "--groups")?;
            forbid(graph, "--row-laplacian/--col-laplacian/--epsilon")?;
        }
        Atoms::Graph => {
            need(a.shape.is_some(), "--shape")?;
            need(a.row_laplacian.is_some(), "--row-laplacian")?;
            need(a.col_laplacian.is_some(), "--col-laplacian")?;
            forbid(a.groups.is_some(), "--groups")?;
        }
    }
    if let Some(eps) = a.epsilon {
        if eps.is_nan() || eps <= 0.0 {
            return Err(usage(format!("--epsilon must be positive, got {eps}")));
        }
    }
    Ok(())
}

pub fn atoms_name(a: Atoms) -> &'static str {
    match a {
        Atoms::Sparse => "sparse",
        Atoms::Group => "group",
        Atoms::Lowrank => "lowrank",
        Atoms::Graph => "graph",
    }
}

/// Builds the projector with budget 1; callers set the real budget with
/// `with_budget`.
pub fn build_projector(a: &StructureArgs, d: usize, seed: Option<u64>) -> Result<AtomicProjector> {
    check_structure(a)?;
    let shape = a.shape.as_deref().map(parse_shape).transpose()?;
    if let Some(sh) = shape {
        if sh.len() != d {
            return Err(usage(format!(
                "--shape {}x{} has {} entries but the data has {d} features",
                sh.rows,
                sh.cols,
                sh.len()
            )));
        }
    }
    let proj = match a.atoms {
        Atoms::Sparse => AtomicProjector::sparse(d, 1)?,
        Atoms::Group => {
            let path = a.groups.as_ref().expect("checked");
            let groups = io::load_groups(path, d).with_context(|| format!("group file {}", path.display()))?;
            AtomicProjector::group(groups, 1)?
        }
        Atoms::Lowrank => AtomicProjector::low_rank(shape.expect("checked"), 1)?,
        Atoms::Graph => {
            let rows = io::load_laplacian(a.row_laplacian.as_ref().expect("checked"))?;
            let cols = io::load_laplacian(a.col_laplacian.as_ref().expect("checked"))?;
            let factors = build_graph_factors(&rows, &cols, a.epsilon.unwrap_or(DEFAULT_EPSILON))?;
            AtomicProjector::graph_low_rank(shape.expect("checked"), factors, 1)?
        }
    };
    Ok(match seed {
        Some(seed) => proj.with_power(PowerIteration {
            seed,
            ..PowerIteration::default()
        }),
        None => proj,
    })
}

pub fn record_structure(m: &mut RunManifest, a: &StructureArgs) -> Result<()> {
    m.set("atoms", atoms_name(a.atoms));
    m.set("shape", &a.shape);
    if let Some(p) = &a.groups {
        m.input("groups", p)?;
    }
    if let Some(p) = &a.row_laplacian {
        m.input("row_laplacian", p)?;
    }
    if let Some(p) = &a.col_laplacian {
        m.input("col_laplacian", p)?;
    }
    if a.atoms == Atoms::Graph {
        m.set("epsilon", a.epsilon.unwrap_or(DEFAULT_EPSILON));
    }
    Ok(())
}

pub fn link_mode(l: LinkArg) -> LinkMode {
    match l {
        LinkArg::Learned => LinkMode::Learned,
        LinkArg::Identity => LinkMode::Known(KnownLink::Identity),
        LinkArg::Logistic => LinkMode::Known(KnownLink::Logistic),
    }
}

pub fn default_metric(ds: &Dataset) -> Metric {
    match ds.kind() {
        TaskKind::BinaryClassification => Metric::Auc,
        TaskKind::Regression => Metric::Mse,
    }
}

/// Scores for AUC and MSE, thresholded classes for F1 and accuracy.
pub fn evaluate(metric: Metric, scores: &[f64], labels: &[f64], threshold: f64) -> Result<csi_core::EvalResult> {
    let r = match metric {
        Metric::Auc | Metric::Mse => metric.evaluate(scores, labels)?,
        Metric::F1 | Metric::Accuracy => {
            let pred: Vec<f64> = scores
                .iter()
                .map(|&s| csi_core::model::classify(s, threshold))
                .collect();
            metric.evaluate(&pred, labels)?
        }
    };
    Ok(r)
}
