mod oracles;

use csi_core::data::Vector;
use csi_core::lpav::{lpav_fit, DEFAULT_TOL};
use csi_core::metrics::{accuracy, auc, f1, mse};
use csi_core::model::SimModel;
use csi_core::MatrixShape;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn auc_equals_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = 0;
    while cases < 100 {
        let n = rng.random_range(2..=50);
        let labels: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        // few distinct values so ties are common
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 * 0.5).collect();
        assert_eq!(auc(&scores, &labels).unwrap(), oracles::auc_by_pairs(&scores, &labels));
        cases += 1;
    }
}

fn labelled() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1.0 } else { -1.0 }), n),
        )
    })
}

fn both_classes(labels: &[f64]) -> bool {
    labels.contains(&1.0) && labels.contains(&-1.0)
}

proptest! {
    #[test]
    fn auc_is_invariant_to_monotone_transforms((scores, labels) in labelled()) {
        prop_assume!(both_classes(&labels));
        let moved: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 3.0).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&moved, &labels).unwrap());
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = auc(&scores, &labels).unwrap() + auc(&flipped, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_metrics_ignore_row_order((scores, labels) in labelled(), rot in 0usize..60) {
        let pred: Vec<f64> = scores.iter().map(|s| if *s >= 0.0 { 1.0 } else { -1.0 }).collect();
        let r = rot % pred.len();
        let mut p2 = pred.clone();
        let mut l2 = labels.clone();
        p2.rotate_left(r);
        l2.rotate_left(r);
        prop_assert_eq!(f1(&pred, &labels).unwrap(), f1(&p2, &l2).unwrap());
        prop_assert_eq!(accuracy(&pred, &labels).unwrap(), accuracy(&p2, &l2).unwrap());
        let m = mse(&scores, &labels).unwrap();
        prop_assert!(m >= 0.0);
        let f = f1(&pred, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn predictions_are_monotone_in_the_index(
        (p, y) in (2usize..20).prop_flat_map(|n| (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )),
        w in prop::collection::vec(-2.0f64..2.0, 3),
        a in prop::collection::vec(-2.0f64..2.0, 3),
        b in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let model = SimModel::new(Vector::new(w).unwrap(), lpav_fit(&p, &y, DEFAULT_TOL).unwrap()).unwrap();
        let (ia, ib) = (model.index(&a).unwrap(), model.index(&b).unwrap());
        let (pa, pb) = (model.predict(&a).unwrap(), model.predict(&b).unwrap());
        if ia <= ib {
            prop_assert!(pa <= pb);
        } else {
            prop_assert!(pa >= pb);
        }
    }

    #[test]
    fn saved_models_predict_identically(
        (p, y) in (1usize..15).prop_flat_map(|n| (
            prop::collection::vec(-1e3f64..1e3, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )),
        w in prop::collection::vec(-1e-3f64..1e3, 4),
        x in prop::collection::vec(-10.0f64..10.0, 4),
    ) {
        let model = SimModel::new(Vector::new(w).unwrap(), lpav_fit(&p, &y, DEFAULT_TOL).unwrap())
            .unwrap()
            .with_shape(Some(MatrixShape::new(2, 2).unwrap()));
        let text = model.save();
        let back = SimModel::load(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.predict(&x).unwrap(), model.predict(&x).unwrap());
        prop_assert_eq!(back.save(), text);
    }
}
