use csi_core::data::{dot, standardize, Dataset, DenseMatrix, FeatureMatrix, SparseMatrix, TaskKind, Vector};
use csi_core::io::{parse_dense_csv, parse_sparse, to_dense_csv, to_sparse_text};
use csi_core::synth::{generate, LabelNoise, SynthLink, SynthSpec};
use proptest::prelude::*;

/// Sparse rows with roughly half the entries zero, plus the dense copy.
fn matrices() -> impl Strategy<Value = (FeatureMatrix, FeatureMatrix)> {
    (1usize..12, 1usize..10).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::option::weighted(0.5, -5.0f64..5.0), n * d).prop_map(move |cells| {
            let rows: Vec<Vec<(usize, f64)>> = cells
                .chunks(d)
                .map(|r| r.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect())
                .collect();
            let dense: Vec<f64> = cells.iter().map(|v| v.unwrap_or(0.0)).collect();
            (
                SparseMatrix::from_rows(d, &rows).unwrap().into(),
                DenseMatrix::new(n, d, dense).unwrap().into(),
            )
        })
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn sparse_and_dense_products_agree((sp, de) in matrices(), seed in any::<u64>()) {
        let d = de.d();
        let n = de.n();
        let w: Vec<f64> = (0..d).map(|j| ((seed.wrapping_add(j as u64) % 17) as f64) - 8.0).collect();
        let v: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(3).wrapping_add(i as u64) % 13) as f64) - 6.0).collect();
        prop_assert!(close(&sp.matvec(&w).unwrap(), &de.matvec(&w).unwrap(), 1e-12));
        prop_assert!(close(&sp.transpose_matvec(&v).unwrap(), &de.transpose_matvec(&v).unwrap(), 1e-12));
    }

    #[test]
    fn transpose_is_the_adjoint((sp, de) in matrices(), scale in 0.1f64..3.0) {
        for m in [&sp, &de] {
            let w: Vec<f64> = (0..m.d()).map(|j| scale * (j as f64 - 2.0)).collect();
            let v: Vec<f64> = (0..m.n()).map(|i| 1.0 - scale * i as f64).collect();
            let lhs = dot(&m.matvec(&w).unwrap(), &v);
            let rhs = dot(&w, &m.transpose_matvec(&v).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn standardization_has_zero_mean_unit_scale((_, de) in matrices()) {
        prop_assume!(de.n() >= 2);
        let ds = Dataset::new(de.clone(), Vector::zeros(de.n()), TaskKind::Regression).unwrap();
        let (std_ds, stats) = standardize(&ds).unwrap();
        let n = de.n() as f64;
        let dense = std_ds.features().to_dense();
        for j in 0..de.d() {
            let col: Vec<f64> = (0..de.n()).map(|i| dense.row(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9 || var < 1e-18);
        }
        // exact inverse of a fresh point
        let x: Vec<f64> = (0..de.d()).map(|j| j as f64 * 0.7 - 1.0).collect();
        let back = stats.invert(&stats.apply(&x).unwrap()).unwrap();
        prop_assert!(close(&back, &x, 1e-12));
    }

    #[test]
    fn text_formats_round_trip((sp, de) in matrices()) {
        let y = Vector::new((0..de.n()).map(|i| i as f64 * 0.25 - 1.0).collect()).unwrap();
        let sparse = Dataset::new(sp, y.clone(), TaskKind::Regression).unwrap();
        let back = parse_sparse(&to_sparse_text(&sparse), Some(sparse.d())).unwrap();
        prop_assert_eq!(back.features().to_dense(), sparse.features().to_dense());
        prop_assert_eq!(back.responses(), sparse.responses());
        let dense = Dataset::new(de, y, TaskKind::Regression).unwrap();
        let back = parse_dense_csv(&to_dense_csv(&dense)).unwrap();
        prop_assert_eq!(back.features(), dense.features());
    }
}

#[test]
fn bernoulli_labels_have_the_right_mean() {
    let spec = SynthSpec {
        n: 10_000,
        d: 1,
        k: 0,
        link: SynthLink::Logistic,
        noise: LabelNoise::Bernoulli,
        seed: 123,
    };
    let data = generate(&spec).unwrap();
    // k = 0 gives a zero index, so p = 1/2
    let mean: f64 = data.dataset.responses().iter().sum::<f64>() / 10_000.0;
    let sigma = (1.0f64 / 10_000.0).sqrt();
    assert!(mean.abs() < 3.0 * sigma, "mean {mean}");

    // with signal: compare the empirical mean of y against E[g(w⋆ᵀx)]
    let data = generate(&SynthSpec { d: 5, k: 2, ..spec }).unwrap();
    let p = data.dataset.features().matvec(&data.w_star).unwrap();
    let expected: f64 = p.iter().map(|&t| (0.5 * t).tanh()).sum::<f64>() / 10_000.0;
    let mean: f64 = data.dataset.responses().iter().sum::<f64>() / 10_000.0;
    // Var(y_i) = 1 - g_i² ≤ 1
    assert!((mean - expected).abs() < 3.0 * sigma, "{mean} vs {expected}");
}
