//! Synthetic single index data and the iterate-convergence experiment.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64` (rand_chacha 0.9) with
//! normals drawn by `rand_distr::StandardNormal` (ziggurat). Draw order is
//! fixed: support of `w⋆`, its values, the covariates row by row, then one
//! uniform per label.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::atoms::AtomicProjector;
use crate::data::{DenseMatrix, Dataset, TaskKind, Vector};
use crate::error::{Error, Result};
use crate::lpav::MonotoneLink;
use crate::solver::{csi_fit, logistic, TrainConfig};

pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9); normals: rand_distr StandardNormal";

#[derive(Debug, Clone, PartialEq)]
pub enum SynthLink {
    /// `2/(1+e^{-t}) - 1`
    Logistic,
    Linear,
    Custom(MonotoneLink),
}

impl SynthLink {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SynthLink::Logistic => logistic(t),
            SynthLink::Linear => t,
            SynthLink::Custom(g) => g.eval(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelNoise {
    /// `y ∈ {±1}` with `P(y = +1) = (1 + g⋆(w⋆ᵀx))/2`, clipped to `[0, 1]`.
    Bernoulli,
    /// `y = g⋆(w⋆ᵀx)` exactly.
    Expected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub link: SynthLink,
    pub noise: LabelNoise,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.k > self.d {
            return Err(Error::InvalidArgument(format!(
                "sparsity k = {} exceeds dimension d = {}",
                self.k, self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    pub w_star: Vector,
    pub link: SynthLink,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut support = sample(&mut rng, spec.d, spec.k).into_vec();
    support.sort_unstable();
    let mut w_star = vec![0.0; spec.d];
    for &j in &support {
        w_star[j] = rng.sample(StandardNormal);
    }

    let data: Vec<f64> = (0..spec.n * spec.d)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let x = DenseMatrix::new(spec.n, spec.d, data)?;

    let mut y = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mean = spec.link.eval(crate::data::dot(x.row(i), &w_star));
        y.push(match spec.noise {
            LabelNoise::Expected => mean,
            LabelNoise::Bernoulli => {
                let p = (0.5 * (1.0 + mean)).clamp(0.0, 1.0);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
        });
    }
    let kind = match spec.noise {
        LabelNoise::Bernoulli => TaskKind::BinaryClassification,
        LabelNoise::Expected => TaskKind::Regression,
    };
    Ok(SynthData {
        dataset: Dataset::new(x.into(), Vector::new(y)?, kind)?,
        w_star: Vector::new(w_star)?,
        link: spec.link.clone(),
    })
}

/// SplitMix64 finalizer; derives independent seeds from `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub dims: Vec<usize>,
    pub seed: u64,
    pub etas: Vec<f64>,
    pub n: usize,
    pub iters: usize,
    pub lambda: f64,
    /// Atom budget as a multiple of `k`.
    pub budget_factor: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            dims: vec![400, 1600, 6400],
            seed: 0,
            etas: vec![0.25, 0.5, 1.0, 2.0],
            n: 500,
            iters: 50,
            lambda: 0.001,
            budget_factor: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub eta: f64,
    pub seed: u64,
    pub initial_distance: f64,
    /// `‖w_t - w⋆‖₂` for `t = 1..=T`.
    pub distances: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn final_distance(&self) -> f64 {
        *self.distances.last().expect("trace is never empty")
    }
}

/// For each `d`: `k = round(√d)`, `s = budget_factor·k`, logistic link with
/// ±1 labels, CSI run for every step size in `etas`; the step size with the
/// smallest final distance is kept. Dimension `i` of the list uses data
/// seed `derive_seed(seed, i)`.
pub fn convergence_experiment(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceTrace>> {
    if cfg.etas.is_empty() {
        return Err(Error::InvalidArgument("no step sizes to try".into()));
    }
    if let Some(&d) = cfg.dims.iter().find(|&&d| d < 4) {
        return Err(Error::InvalidArgument(format!("dimension {d} is below 4")));
    }
    cfg.dims
        .par_iter()
        .enumerate()
        .map(|(i, &d)| run_dimension(cfg, d, derive_seed(cfg.seed, i as u64)))
        .collect()
}

fn run_dimension(cfg: &ConvergenceConfig, d: usize, seed: u64) -> Result<ConvergenceTrace> {
    let k = ((d as f64).sqrt().round() as usize).max(1);
    let s = (cfg.budget_factor * k).min(d);
    let data = generate(&SynthSpec {
        n: cfg.n,
        d,
        k,
        link: SynthLink::Logistic,
        noise: LabelNoise::Bernoulli,
        seed,
    })?;
    let projector = AtomicProjector::sparse(d, s)?;

    let runs: Vec<Result<ConvergenceTrace>> = cfg
        .etas
        .par_iter()
        .map(|&eta| {
            let train = TrainConfig::new(projector.clone())
                .eta(eta)
                .lambda(cfg.lambda)
                .iters(cfg.iters)
                .reference(data.w_star.clone());
            let report = csi_fit(&data.dataset, &train)?;
            Ok(ConvergenceTrace {
                d,
                k,
                s,
                eta,
                seed,
                initial_distance: report.initial_distance.unwrap_or(f64::NAN),
                distances: report.distance_trace.unwrap_or_default(),
            })
        })
        .collect();

    let mut best: Option<ConvergenceTrace> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(t) => {
                if best
                    .as_ref()
                    .is_none_or(|b| t.final_distance() < b.final_distance())
                {
                    best = Some(t);
                }
            }
            Err(e @ Error::Diverged { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Empty("no step sizes to try")))
}

/// Writes `d,t,distance` rows, `t` from 1.
pub fn write_trace_csv<W: Write>(traces: &[ConvergenceTrace], mut out: W) -> Result<()> {
    writeln!(out, "d,t,distance")?;
    for tr in traces {
        for (t, dist) in tr.distances.iter().enumerate() {
            writeln!(out, "{},{},{}", tr.d, t + 1, dist)?;
        }
    }
    Ok(())
}
