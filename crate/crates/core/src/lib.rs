//! Learning structured single index models, `E[y | x] = g(wᵀx)` with both
//! the weights `w` and the monotone link `g` unknown.
//!
//! The estimator alternates a monotone 1-Lipschitz link fit ([`lpav`]) with
//! a projected gradient step on a calibrated loss ([`solver`]), projecting
//! onto a budget of atoms ([`atoms`]): sparse, group sparse, low rank, or
//! graph-weighted low rank.

pub mod atoms;
pub mod data;
pub mod error;
pub mod io;
pub mod lpav;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod synth;

pub use atoms::{
    build_graph_factors, AtomicProjector, GraphFactors, GroupPartition, MatrixShape,
    PowerIteration, Structure,
};
pub use data::{standardize, Dataset, DenseMatrix, FeatureMatrix, SparseMatrix, Standardization, TaskKind, Vector};
pub use error::{Error, Result};
pub use lpav::{lpav_fit, MonotoneLink};
pub use metrics::{EvalResult, Metric};
pub use model::SimModel;
pub use solver::{calibrated_loss, csi_fit, gradient, FitReport, KnownLink, LinkMode, TrainConfig};
pub use synth::{convergence_experiment, generate, ConvergenceConfig, SynthSpec};
