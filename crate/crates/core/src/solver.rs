//! Calibrated single index (CSI) fitting.
//!
//! Starting from `w₀ = P(Xᵀy)`, every iteration
//!
//! 1. fits the link `g_t` to `(Xw_{t-1}, y)` with LPAV (or uses a known link),
//! 2. takes a gradient step on the calibrated loss plus ridge,
//!    `w̃_t = w_{t-1} - η·[(1/n) Σ (g_t(w_{t-1}ᵀx_i) - y_i) x_i + λ w_{t-1}]`,
//! 3. projects back onto the atom budget, `w_t = P(w̃_t)`.
//!
//! The shipped link is refit on `Xw_T` so it matches the shipped weights.

use crate::atoms::AtomicProjector;
use crate::data::{distance, dot, Dataset, Vector};
use crate::error::{Error, Result};
use crate::lpav::{lpav_fit, MonotoneLink, DEFAULT_TOL};
use crate::model::SimModel;

/// A univariate link together with its antiderivative `Φ`, `Φ(0) = 0`.
pub trait TransferFunction {
    fn eval(&self, t: f64) -> f64;
    fn antiderivative(&self, t: f64) -> f64;
}

impl TransferFunction for MonotoneLink {
    fn eval(&self, t: f64) -> f64 {
        MonotoneLink::eval(self, t)
    }

    fn antiderivative(&self, t: f64) -> f64 {
        MonotoneLink::antiderivative(self, t)
    }
}

/// Links that can be supplied instead of learned.
#[derive(Debug, Clone, PartialEq)]
pub enum KnownLink {
    /// `g(t) = t`
    Identity,
    /// `g(t) = 2/(1 + e^{-t}) - 1`
    Logistic,
    Table(MonotoneLink),
}

pub fn logistic(t: f64) -> f64 {
    // tanh(t/2) == 2/(1+e^{-t}) - 1, without overflow
    (0.5 * t).tanh()
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl TransferFunction for KnownLink {
    fn eval(&self, t: f64) -> f64 {
        match self {
            KnownLink::Identity => t,
            KnownLink::Logistic => logistic(t),
            KnownLink::Table(g) => g.eval(t),
        }
    }

    fn antiderivative(&self, t: f64) -> f64 {
        match self {
            KnownLink::Identity => 0.5 * t * t,
            KnownLink::Logistic => 2.0 * softplus(t) - t - 2.0 * std::f64::consts::LN_2,
            KnownLink::Table(g) => g.antiderivative(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum LinkMode {
    /// Refit the link with LPAV at every iteration.
    #[default]
    Learned,
    /// Hold the link fixed; the loop reduces to iterative hard thresholding
    /// on the corresponding calibrated loss.
    Known(KnownLink),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub lambda: f64,
    pub iters: usize,
    pub projector: AtomicProjector,
    pub lpav_tol: f64,
    /// Keep every iterate `w_t` in the report.
    pub track_history: bool,
    /// When set, the report carries `‖w_t - reference‖₂` per iteration.
    pub reference: Option<Vector>,
    pub link: LinkMode,
    /// Stop once `‖w_t - w_{t-1}‖ / max(1, ‖w_{t-1}‖)` drops below this.
    pub stop_tol: Option<f64>,
}

impl TrainConfig {
    /// Defaults: `η = 1`, `λ = 10⁻³`, `T = 50`, learned link.
    pub fn new(projector: AtomicProjector) -> Self {
        TrainConfig {
            eta: 1.0,
            lambda: 1e-3,
            iters: 50,
            projector,
            lpav_tol: DEFAULT_TOL,
            track_history: false,
            reference: None,
            link: LinkMode::Learned,
            stop_tol: None,
        }
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn iters(mut self, iters: usize) -> Self {
        self.iters = iters;
        self
    }

    pub fn reference(mut self, w: Vector) -> Self {
        self.reference = Some(w);
        self
    }

    pub fn link(mut self, link: LinkMode) -> Self {
        self.link = link;
        self
    }

    pub fn track_history(mut self, on: bool) -> Self {
        self.track_history = on;
        self
    }

    pub fn stop_tol(mut self, tol: Option<f64>) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ridge weight must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
        }
        if self.lpav_tol.is_nan() || self.lpav_tol <= 0.0 {
            return Err(Error::InvalidArgument("LPAV tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: SimModel,
    pub initial_weights: Vector,
    /// Calibrated loss plus ridge at `(w_t, g_t)` for `t = 1..=iterations_run`.
    pub objective_trace: Vec<f64>,
    pub distance_trace: Option<Vec<f64>>,
    /// `‖w₀ - reference‖₂`
    pub initial_distance: Option<f64>,
    pub history: Option<Vec<Vector>>,
    pub iterations_run: usize,
}

fn check_model_dims(ds: &Dataset, w: &[f64]) -> Result<()> {
    if ds.d() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.d(),
            found: w.len(),
        });
    }
    Ok(())
}

fn loss_from_projections<G: TransferFunction + ?Sized>(p: &[f64], y: &[f64], g: &G) -> f64 {
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&t, &yi)| g.antiderivative(t) - yi * t)
        .sum();
    total / p.len() as f64
}

/// `(1/n) Σ [Φ(wᵀx_i) - y_i wᵀx_i]` with `Φ' = g`, `Φ(0) = 0`.
pub fn calibrated_loss<G: TransferFunction + ?Sized>(ds: &Dataset, w: &[f64], g: &G) -> Result<f64> {
    check_model_dims(ds, w)?;
    if ds.n() == 0 {
        return Err(Error::Empty("dataset has no rows"));
    }
    let p = ds.features().matvec(w)?;
    Ok(loss_from_projections(&p, ds.responses(), g))
}

fn gradient_from_projections<G: TransferFunction + ?Sized>(
    ds: &Dataset,
    p: &[f64],
    w: &[f64],
    g: &G,
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = ds.n() as f64;
    let residuals: Vec<f64> = p
        .iter()
        .zip(ds.responses().iter())
        .map(|(&t, &y)| (g.eval(t) - y) / n)
        .collect();
    let mut grad = ds.features().transpose_matvec(&residuals)?;
    if lambda != 0.0 {
        for (gj, wj) in grad.iter_mut().zip(w) {
            *gj += lambda * wj;
        }
    }
    Ok(grad)
}

/// `(1/n) Σ (g(wᵀx_i) - y_i) x_i + λw`, the gradient of the calibrated loss
/// plus `(λ/2)‖w‖²` for a fixed link.
pub fn gradient<G: TransferFunction + ?Sized>(
    ds: &Dataset,
    w: &[f64],
    g: &G,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_model_dims(ds, w)?;
    if ds.n() == 0 {
        return Err(Error::Empty("dataset has no rows"));
    }
    let p = ds.features().matvec(w)?;
    gradient_from_projections(ds, &p, w, g, lambda)
}

/// What one CSI iteration produced.
#[derive(Debug, Clone)]
pub struct Step {
    pub iteration: usize,
    pub objective: f64,
    /// `‖w_t - w_{t-1}‖ / max(1, ‖w_{t-1}‖)`
    pub relative_change: f64,
}

/// Iteration state of a CSI fit. [`csi_fit`] drives it to completion; it is
/// public so callers can time or inspect individual iterations.
pub struct CsiSolver<'a> {
    ds: &'a Dataset,
    cfg: &'a TrainConfig,
    weights: Vec<f64>,
    projections: Vec<f64>,
    iteration: usize,
}

impl<'a> CsiSolver<'a> {
    /// Validates inputs and initializes `w₀ = P(Xᵀy)`.
    pub fn new(ds: &'a Dataset, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if ds.n() == 0 {
            return Err(Error::Empty("dataset has no rows"));
        }
        if cfg.projector.dim() != ds.d() {
            return Err(Error::DimensionMismatch {
                expected: ds.d(),
                found: cfg.projector.dim(),
            });
        }
        if let Some(r) = &cfg.reference {
            check_model_dims(ds, r)?;
        }
        // surface the "budget exceeds atoms" warning once, not per iteration
        let xty = ds.features().transpose_matvec(ds.responses())?;
        let weights = cfg.projector.project(&xty)?;
        let projections = ds.features().matvec(&weights)?;
        Ok(CsiSolver {
            ds,
            cfg,
            weights,
            projections,
            iteration: 0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn current_link(&self) -> Result<LinkChoice<'a>> {
        Ok(match &self.cfg.link {
            LinkMode::Learned => LinkChoice::Fitted(lpav_fit(
                &self.projections,
                self.ds.responses(),
                self.cfg.lpav_tol,
            )?),
            LinkMode::Known(k) => LinkChoice::Known(k),
        })
    }

    /// Runs one iteration: link update, gradient step, projection.
    pub fn step(&mut self) -> Result<Step> {
        let t = self.iteration + 1;
        let link = self.current_link()?;
        let g = link.as_transfer();
        let grad =
            gradient_from_projections(self.ds, &self.projections, &self.weights, g, self.cfg.lambda)?;
        let eta = self.cfg.eta;
        let candidate: Vec<f64> = self
            .weights
            .iter()
            .zip(&grad)
            .map(|(w, gr)| w - eta * gr)
            .collect();
        if candidate.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: t });
        }
        let next = self.cfg.projector.project_unchecked(&candidate);
        let projections = self.ds.features().matvec(&next)?;
        if projections.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: t });
        }
        let change = distance(&next, &self.weights) / dot(&self.weights, &self.weights).sqrt().max(1.0);
        let ridge = 0.5 * self.cfg.lambda * dot(&next, &next);
        let objective = loss_from_projections(&projections, self.ds.responses(), g) + ridge;
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration: t });
        }
        self.weights = next;
        self.projections = projections;
        self.iteration = t;
        Ok(Step {
            iteration: t,
            objective,
            relative_change: change,
        })
    }

    /// LPAV fit of the responses on the current projections.
    pub fn final_link(&self) -> Result<MonotoneLink> {
        lpav_fit(&self.projections, self.ds.responses(), self.cfg.lpav_tol)
    }
}

enum LinkChoice<'a> {
    Fitted(MonotoneLink),
    Known(&'a KnownLink),
}

impl LinkChoice<'_> {
    fn as_transfer(&self) -> &dyn TransferFunction {
        match self {
            LinkChoice::Fitted(g) => g,
            LinkChoice::Known(k) => *k,
        }
    }
}

/// Runs CSI for `cfg.iters` iterations (or until `cfg.stop_tol` is met).
pub fn csi_fit(ds: &Dataset, cfg: &TrainConfig) -> Result<FitReport> {
    let mut solver = CsiSolver::new(ds, cfg)?;
    let initial_weights = Vector::new(solver.weights().to_vec())?;
    let initial_distance = cfg
        .reference
        .as_ref()
        .map(|r| distance(solver.weights(), r));
    let mut objective_trace = Vec::with_capacity(cfg.iters);
    let mut distance_trace = cfg.reference.as_ref().map(|_| Vec::with_capacity(cfg.iters));
    let mut history = cfg.track_history.then(Vec::new);

    for _ in 0..cfg.iters {
        let step = solver.step()?;
        objective_trace.push(step.objective);
        if let (Some(trace), Some(r)) = (distance_trace.as_mut(), cfg.reference.as_ref()) {
            trace.push(distance(solver.weights(), r));
        }
        if let Some(h) = history.as_mut() {
            h.push(Vector::new(solver.weights().to_vec())?);
        }
        if cfg.stop_tol.is_some_and(|tol| step.relative_change < tol) {
            break;
        }
    }

    let link = solver.final_link()?;
    let model = SimModel::new(Vector::new(solver.weights().to_vec())?, link)?
        .with_shape(cfg.projector.shape());
    Ok(FitReport {
        model,
        initial_weights,
        iterations_run: solver.iteration(),
        objective_trace,
        distance_trace,
        initial_distance,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DenseMatrix, TaskKind};

    fn dataset(rows: &[Vec<f64>], y: &[f64]) -> Dataset {
        Dataset::new(
            DenseMatrix::from_rows(rows).unwrap().into(),
            Vector::new(y.to_vec()).unwrap(),
            TaskKind::Regression,
        )
        .unwrap()
    }

    #[test]
    fn zero_response_stays_at_origin() {
        let ds = dataset(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]], &[0.0; 3]);
        let cfg = TrainConfig::new(AtomicProjector::sparse(2, 1).unwrap())
            .lambda(0.0)
            .iters(5)
            .track_history(true);
        let report = csi_fit(&ds, &cfg).unwrap();
        assert_eq!(report.initial_weights.as_slice(), &[0.0, 0.0]);
        for w in report.history.unwrap() {
            assert_eq!(w.as_slice(), &[0.0, 0.0]);
        }
        assert_eq!(report.iterations_run, 5);
    }

    #[test]
    fn perfect_fit_is_a_fixed_point() {
        // y = wᵀx exactly with w = (1, 0); LPAV reproduces y, gradient vanishes
        let rows = vec![vec![0.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.5]];
        let y = [0.0, 1.0, 2.0];
        let ds = dataset(&rows, &y);
        let g = lpav_fit(&[0.0, 1.0, 2.0], &y, 1e-10).unwrap();
        let grad = gradient(&ds, &[1.0, 0.0], &g, 0.0).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_sample_gradient() {
        let ds = dataset(&[vec![1.0, 0.0]], &[0.0]);
        // wᵀx = 1 and g(1) = 1
        let g = MonotoneLink::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(gradient(&ds, &[1.0, 0.0], &g, 0.0).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn loss_examples() {
        let ds = dataset(&[vec![1.0], vec![2.0]], &[1.0, -1.0]);
        let zero = MonotoneLink::constant(0.0).unwrap();
        // (1/n) Σ -y_i wᵀx_i = ((-1)(0.5) + (1)(1.0)) / 2
        let l = calibrated_loss(&ds, &[0.5], &zero).unwrap();
        assert!((l - 0.25).abs() < 1e-15);

        let ident = MonotoneLink::new(vec![-1.0, 1.0], vec![-1.0, 1.0]).unwrap();
        let single = dataset(&[vec![1.0]], &[0.0]);
        assert!((calibrated_loss(&single, &[1.0], &ident).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(calibrated_loss(&ds, &[0.0], &ident).unwrap(), 0.0);
    }

    #[test]
    fn logistic_antiderivative() {
        let g = KnownLink::Logistic;
        assert_eq!(g.antiderivative(0.0), 0.0);
        let h = 1e-5;
        for &t in &[-30.0, -2.0, 0.3, 4.0, 50.0] {
            let fd = (g.antiderivative(t + h) - g.antiderivative(t - h)) / (2.0 * h);
            assert!((fd - g.eval(t)).abs() < 1e-8, "t={t}");
        }
        assert_eq!(logistic(0.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let p = AtomicProjector::sparse(2, 1).unwrap();
        assert!(TrainConfig::new(p.clone()).eta(0.0).validate().is_err());
        assert!(TrainConfig::new(p.clone()).lambda(-1.0).validate().is_err());
        assert!(TrainConfig::new(p.clone()).iters(0).validate().is_err());
        assert!(TrainConfig::new(p).validate().is_ok());
    }

    #[test]
    fn divergence_names_iteration() {
        let ds = dataset(&[vec![1e200, 0.0], vec![0.0, 1.0]], &[1.0, 2.0]);
        let cfg = TrainConfig::new(AtomicProjector::sparse(2, 2).unwrap())
            .link(LinkMode::Known(KnownLink::Identity))
            .eta(1e200);
        assert!(matches!(csi_fit(&ds, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn projector_dimension_checked() {
        let ds = dataset(&[vec![1.0, 0.0]], &[1.0]);
        let cfg = TrainConfig::new(AtomicProjector::sparse(3, 1).unwrap());
        assert!(matches!(
            csi_fit(&ds, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
