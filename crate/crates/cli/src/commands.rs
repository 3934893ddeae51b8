use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use csi_core::io::{self, split};
use csi_core::solver::csi_fit;
use csi_core::synth::{self, derive_seed, ConvergenceConfig, LabelNoise, SynthLink, SynthSpec};
use csi_core::{standardize, Dataset, SimModel, Standardization, TrainConfig};
use log::{info, warn};
use rayon::prelude::*;

use crate::args::*;
use crate::common::*;
use crate::manifest::{sidecar, write_file, RunManifest};

fn fit_config(m: &mut RunManifest, f: &FitArgs) {
    m.set("lambda", f.lambda)
        .set("iters", f.iters)
        .set("link", format!("{:?}", f.link).to_lowercase())
        .set("standardize", f.standardize);
}

fn maybe_standardize(ds: Dataset, on: bool) -> Result<(Dataset, Option<Standardization>)> {
    if on {
        let (ds, stats) = standardize(&ds)?;
        Ok((ds, Some(stats)))
    } else {
        Ok((ds, None))
    }
}

pub fn train(a: &TrainArgs) -> Result<()> {
    check_structure(&a.structure)?;
    let ds = load_data(&a.data, None)?;
    let (ds, stats) = maybe_standardize(ds, a.fit.standardize)?;
    let projector = build_projector(&a.structure, ds.d(), a.seed)?.with_budget(a.s)?;
    let cfg = TrainConfig::new(projector)
        .eta(a.eta)
        .lambda(a.fit.lambda)
        .iters(a.fit.iters)
        .link(link_mode(a.fit.link));
    let report = csi_fit(&ds, &cfg)?;
    let model = report.model.with_preprocessing(stats)?;
    write_file(&a.model_out, &model.save())?;

    let mut m = RunManifest::new("train");
    record_data(&mut m, &a.data)?;
    record_structure(&mut m, &a.structure)?;
    fit_config(&mut m, &a.fit);
    m.set("s", a.s).set("eta", a.eta);
    m.seed = a.seed;
    m.write(&sidecar(&a.model_out))?;

    let nonzero = model.weights().iter().filter(|w| **w != 0.0).count();
    println!(
        "trained on n={} d={}: {} iterations, objective {}, {} nonzero weights, {} link knots",
        ds.n(),
        ds.d(),
        report.iterations_run,
        report.objective_trace.last().copied().unwrap_or(f64::NAN),
        nonzero,
        model.link().len()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<SimModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SimModel::load(&text).with_context(|| format!("model file {}", path.display()))
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_data(&a.data, Some(model.dim()))?;
    let scores = model.predict_dataset(&ds)?;
    let mut out = String::from("row,score,pred\n");
    for (i, s) in scores.iter().enumerate() {
        let pred = csi_core::model::classify(*s, a.threshold);
        let _ = writeln!(out, "{i},{s},{pred}");
    }
    write_file(&a.out, &out)?;

    let mut m = RunManifest::new("predict");
    m.input("model", &a.model)?;
    record_data(&mut m, &a.data)?;
    m.set("threshold", a.threshold);
    m.write(&sidecar(&a.out))?;
    info!("scored {} rows", scores.len());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_data(&a.data, Some(model.dim()))?;
    let scores = model.predict_dataset(&ds)?;
    let metrics = if a.metric.is_empty() {
        vec![default_metric(&ds)]
    } else {
        a.metric.clone()
    };
    let mut csv = String::from("metric,value,n\n");
    let mut table = format!("{:<8} {:>12} {:>8}\n", "metric", "value", "n");
    for metric in &metrics {
        let r = evaluate(*metric, &scores, ds.responses(), a.threshold)?;
        let _ = writeln!(csv, "{},{},{}", r.metric, r.value, r.n);
        let _ = writeln!(table, "{:<8} {:>12.6} {:>8}", r.metric.name(), r.value, r.n);
    }
    write_file(&a.out, &csv)?;
    print!("{table}");

    let mut m = RunManifest::new("eval");
    m.input("model", &a.model)?;
    record_data(&mut m, &a.data)?;
    m.set("metrics", metrics.iter().map(|x| x.name()).collect::<Vec<_>>())
        .set("threshold", a.threshold);
    m.write(&sidecar(&a.out))?;
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: a.n,
        d: a.d,
        k: a.k,
        link: match a.link {
            SynthLinkArg::Logistic => SynthLink::Logistic,
            SynthLinkArg::Linear => SynthLink::Linear,
        },
        noise: match a.noise {
            NoiseArg::Bernoulli => LabelNoise::Bernoulli,
            NoiseArg::Expected => LabelNoise::Expected,
        },
        seed: a.seed,
    };
    let data = synth::generate(&spec).map_err(|e| usage(e.to_string()))?;
    let (name, text) = match a.format {
        OutFormat::Csv => ("data.csv", io::to_dense_csv(&data.dataset)),
        OutFormat::Sparse => ("data.txt", io::to_sparse_text(&data.dataset)),
    };
    write_file(&a.out.join(name), &text)?;
    let mut w = String::from("index,value\n");
    for (j, v) in data.w_star.iter().enumerate() {
        let _ = writeln!(w, "{j},{v}");
    }
    write_file(&a.out.join("w_star.csv"), &w)?;

    let mut m = RunManifest::new("synth");
    m.set("n", a.n)
        .set("d", a.d)
        .set("k", a.k)
        .set("link", format!("{:?}", a.link).to_lowercase())
        .set("noise", format!("{:?}", a.noise).to_lowercase())
        .set("format", format!("{:?}", a.format).to_lowercase());
    m.seed = Some(a.seed);
    m.generator = Some(synth::GENERATOR.to_string());
    m.write(&a.out.join("manifest.json"))?;
    Ok(())
}

pub fn convergence(a: &ConvergenceArgs) -> Result<()> {
    let cfg = ConvergenceConfig {
        dims: a.d.clone(),
        seed: a.seed,
        etas: a.etas.clone(),
        n: a.n,
        iters: a.iters,
        lambda: a.lambda,
        budget_factor: a.budget_factor,
    };
    let traces = synth::convergence_experiment(&cfg)?;
    let mut buf = Vec::new();
    synth::write_trace_csv(&traces, &mut buf)?;
    write_file(&a.out, &String::from_utf8(buf)?)?;

    println!(
        "{:>6} {:>4} {:>5} {:>6} {:>12} {:>12} {:>7}",
        "d", "k", "s", "eta", "initial", "final", "ratio"
    );
    for t in &traces {
        println!(
            "{:>6} {:>4} {:>5} {:>6} {:>12.4} {:>12.4} {:>7.4}",
            t.d,
            t.k,
            t.s,
            t.eta,
            t.initial_distance,
            t.final_distance(),
            t.final_distance() / t.initial_distance
        );
    }

    let mut m = RunManifest::new("convergence");
    m.set("d", &a.d)
        .set("etas", &a.etas)
        .set("n", a.n)
        .set("iters", a.iters)
        .set("lambda", a.lambda)
        .set("budget_factor", a.budget_factor)
        .set(
            "data_seeds",
            (0..a.d.len()).map(|i| derive_seed(a.seed, i as u64)).collect::<Vec<_>>(),
        );
    m.seed = Some(a.seed);
    m.generator = Some(synth::GENERATOR.to_string());
    m.write(&sidecar(&a.out))?;
    Ok(())
}

/// `base/4, base/8, …, base/1024`, floored at 1, deduplicated.
pub fn default_budgets(base: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (2..=10).map(|j| (base >> j).max(1)).collect();
    out.dedup();
    out
}

struct Point {
    s: usize,
    eta: f64,
    // None when the run diverged
    score: Option<f64>,
    model: Option<SimModel>,
    note: String,
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    check_structure(&a.structure)?;
    if a.etas.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(usage("--etas must all be positive"));
    }
    let ds = load_data(&a.data, None)?;
    let metric = a.metric.unwrap_or_else(|| default_metric(&ds));
    let [ft, fv, fs] = a.split[..] else {
        return Err(usage("--split takes three fractions"));
    };
    if !(ft > 0.0 && fv > 0.0 && fs > 0.0 && (ft + fv + fs - 1.0).abs() <= 1e-9) {
        return Err(usage("--split fractions must be positive and sum to 1"));
    }
    let (train, val, test) = split(&ds, (ft, fv, fs), a.seed)?;
    // statistics come from the training part only
    let (train, stats) = maybe_standardize(train, a.fit.standardize)?;

    let base = build_projector(&a.structure, ds.d(), None)?;
    let budgets = if a.s.is_empty() {
        default_budgets(base.available_atoms())
    } else {
        a.s.clone()
    };
    if budgets.contains(&0) {
        return Err(usage("--s values must be at least 1"));
    }
    let grid: Vec<(usize, f64)> = budgets
        .iter()
        .flat_map(|&s| a.etas.iter().map(move |&e| (s, e)))
        .collect();

    let points: Vec<Point> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(s, eta))| -> Result<Point> {
            let seed = derive_seed(a.seed, i as u64);
            let projector = build_projector(&a.structure, ds.d(), Some(seed))?.with_budget(s)?;
            let cfg = TrainConfig::new(projector)
                .eta(eta)
                .lambda(a.fit.lambda)
                .iters(a.fit.iters)
                .link(link_mode(a.fit.link));
            match csi_fit(&train, &cfg) {
                Ok(report) => {
                    let model = report.model.with_preprocessing(stats.clone())?;
                    let scores = model.predict_dataset(&val)?;
                    let score = evaluate(metric, &scores, val.responses(), 0.0)?.value;
                    Ok(Point { s, eta, score: Some(score), model: Some(model), note: String::new() })
                }
                Err(e @ csi_core::Error::Diverged { .. }) => {
                    warn!("s={s} eta={eta}: {e}");
                    Ok(Point { s, eta, score: None, model: None, note: e.to_string() })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_>>()?;

    let better = |x: f64, y: f64| if metric.higher_is_better() { x > y } else { x < y };
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(v) = p.score {
            if best.is_none_or(|b| better(v, points[b].score.expect("scored"))) {
                best = Some(i);
            }
        }
    }
    let best = best.context("every grid point diverged")?;

    let mut summary = format!("s,eta,val_{metric},selected\n");
    for (i, p) in points.iter().enumerate() {
        let dir = a.out.join("points").join(format!("s{}_eta{}", p.s, p.eta));
        let value = p.score.map_or("nan".to_string(), |v| v.to_string());
        let _ = writeln!(summary, "{},{},{},{}", p.s, p.eta, value, i == best);
        let mut pm = RunManifest::new("sweep");
        pm.set("s", p.s).set("eta", p.eta).set("grid_index", i).set("parent", a.out.display().to_string());
        pm.seed = Some(derive_seed(a.seed, i as u64));
        match &p.model {
            Some(model) => {
                write_file(&dir.join("model.csi"), &model.save())?;
                write_file(&dir.join("validation.csv"), &format!("metric,value,n\n{metric},{value},{}\n", val.n()))?;
            }
            None => {
                pm.set("diverged", &p.note);
            }
        }
        pm.write(&dir.join("manifest.json"))?;
    }
    write_file(&a.out.join("summary.csv"), &summary)?;

    let chosen = &points[best];
    let model = chosen.model.as_ref().expect("scored points have models");
    write_file(&a.out.join("best_model.csi"), &model.save())?;
    let test_scores = model.predict_dataset(&test)?;
    let r = evaluate(metric, &test_scores, test.responses(), 0.0)?;
    write_file(&a.out.join("test.csv"), &format!("metric,value,n\n{},{},{}\n", r.metric, r.value, r.n))?;

    let mut m = RunManifest::new("sweep");
    record_data(&mut m, &a.data)?;
    record_structure(&mut m, &a.structure)?;
    fit_config(&mut m, &a.fit);
    m.set("s_grid", &budgets)
        .set("etas", &a.etas)
        .set("metric", metric.name())
        .set("split", &a.split)
        .set("split_sizes", [train.n(), val.n(), test.n()]);
    m.seed = Some(a.seed);
    m.write(&a.out.join("manifest.json"))?;

    println!("{:>8} {:>8} {:>12}", "s", "eta", format!("val {metric}"));
    for (i, p) in points.iter().enumerate() {
        let mark = if i == best { " *" } else { "" };
        match p.score {
            Some(v) => println!("{:>8} {:>8} {:>12.6}{mark}", p.s, p.eta, v),
            None => println!("{:>8} {:>8} {:>12}", p.s, p.eta, "diverged"),
        }
    }
    println!("test {metric} at s={} eta={}: {:.6}", chosen.s, chosen.eta, r.value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_grid() {
        assert_eq!(default_budgets(4096), vec![1024, 512, 256, 128, 64, 32, 16, 8, 4]);
        assert_eq!(default_budgets(100), vec![25, 12, 6, 3, 1]);
        assert_eq!(default_budgets(3), vec![1]);
    }
}
