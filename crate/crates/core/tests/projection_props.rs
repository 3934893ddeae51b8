mod oracles;

use csi_core::atoms::{build_graph_factors, AtomicProjector, GroupPartition, MatrixShape};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()
}

fn assert_optimal_and_idempotent(proj: &AtomicProjector, w: &[f64], reference: &[f64]) {
    let out = proj.project(w).unwrap();
    let gap = (oracles::distance(&out, w) - oracles::distance(reference, w)).abs();
    assert!(gap < 1e-8, "distance gap {gap:e} for {w:?}");
    let again = proj.project(&out).unwrap();
    assert!(oracles::distance(&again, &out) < 1e-8, "not idempotent for {w:?}");
}

#[test]
fn sparse_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let d = rng.random_range(1..=6);
        let s = rng.random_range(1..=d);
        let w = random_vec(&mut rng, d);
        let proj = AtomicProjector::sparse(d, s).unwrap();
        assert_optimal_and_idempotent(&proj, &w, &oracles::sparse_by_enumeration(&w, s));
    }
}

fn random_partition(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut groups = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let take = rng.random_range(1..=rest.len().min(3));
        groups.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    groups
}

#[test]
fn group_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let d = rng.random_range(1..=6);
        let groups = random_partition(&mut rng, d);
        let s = rng.random_range(1..=groups.len());
        let w = random_vec(&mut rng, d);
        let proj = AtomicProjector::group(GroupPartition::new(groups.clone(), d).unwrap(), s).unwrap();
        assert_optimal_and_idempotent(&proj, &w, &oracles::group_by_enumeration(&w, &groups, s));
    }
}

#[test]
fn low_rank_matches_full_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = MatrixShape::new(3, 3).unwrap();
    for _ in 0..200 {
        let s = rng.random_range(1..=3);
        let w = random_vec(&mut rng, 9);
        let reference = oracles::svd_truncate(&DMatrix::from_row_slice(3, 3, &w), s);
        let reference: Vec<f64> = reference.transpose().iter().copied().collect();
        let proj = AtomicProjector::low_rank(shape, s).unwrap();
        assert_optimal_and_idempotent(&proj, &w, &reference);
    }
}

#[test]
fn graph_low_rank_matches_transformed_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = MatrixShape::new(3, 3).unwrap();
    for _ in 0..200 {
        let s = rng.random_range(1..=3);
        let eps = rng.random_range(0.05..1.0);
        let lr = oracles::random_laplacian(3, || rng.random::<f64>());
        let lc = oracles::random_laplacian(3, || rng.random::<f64>());
        let w = random_vec(&mut rng, 9);
        let reference = oracles::graph_truncate(&DMatrix::from_row_slice(3, 3, &w), &lr, &lc, eps, s);
        let reference: Vec<f64> = reference.transpose().iter().copied().collect();
        let factors = build_graph_factors(&lr, &lc, eps).unwrap();
        let proj = AtomicProjector::graph_low_rank(shape, factors, s).unwrap();
        let out = proj.project(&w).unwrap();
        assert!(oracles::distance(&out, &reference) < 1e-8, "{out:?} vs {reference:?}");
        let again = proj.project(&out).unwrap();
        assert!(oracles::distance(&again, &out) < 1e-8);
    }
}

#[test]
fn low_rank_on_a_larger_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = MatrixShape::new(20, 30).unwrap();
    let w = random_vec(&mut rng, 600);
    let reference = oracles::svd_truncate(&shape.to_matrix(&w), 4);
    let out = AtomicProjector::low_rank(shape, 4).unwrap().project(&w).unwrap();
    assert!(oracles::distance(&out, &shape.to_vec(&reference)) < 1e-7);
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..60)
}

proptest! {
    #[test]
    fn sparse_respects_budget(w in vector(), s in 1usize..20) {
        let proj = AtomicProjector::sparse(w.len(), s).unwrap();
        let out = proj.project(&w).unwrap();
        prop_assert!(out.iter().filter(|v| **v != 0.0).count() <= s);
        prop_assert!(proj.atomic_cardinality_upper(&out, 0.0).unwrap() <= s);
        // kept entries are copied, never rescaled
        for (o, x) in out.iter().zip(&w) {
            prop_assert!(*o == 0.0 || o == x);
        }
    }

    #[test]
    fn projection_never_increases_the_norm(w in vector(), s in 1usize..20) {
        let out = AtomicProjector::sparse(w.len(), s).unwrap().project(&w).unwrap();
        prop_assert!(oracles::distance(&out, &vec![0.0; w.len()]) <= oracles::distance(&w, &vec![0.0; w.len()]));
    }

    #[test]
    fn sparse_is_scale_equivariant(w in vector(), s in 1usize..20, c in 0.1f64..10.0) {
        let proj = AtomicProjector::sparse(w.len(), s).unwrap();
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let a = proj.project(&scaled).unwrap();
        let b: Vec<f64> = proj.project(&w).unwrap().iter().map(|v| v * c).collect();
        prop_assert!(oracles::distance(&a, &b) <= 1e-12 * (1.0 + oracles::distance(&b, &vec![0.0; b.len()])));
    }

    #[test]
    fn low_rank_respects_budget(seed in any::<u64>(), s in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = MatrixShape::new(5, 7).unwrap();
        let w = random_vec(&mut rng, 35);
        let proj = AtomicProjector::low_rank(shape, s).unwrap();
        let out = proj.project(&w).unwrap();
        prop_assert!(proj.atomic_cardinality_upper(&out, 1e-8).unwrap() <= s);
        prop_assert!(oracles::distance(&out, &w) <= oracles::distance(&w, &[0.0; 35]) + 1e-12);
    }
}

