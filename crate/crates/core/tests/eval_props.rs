use lccde::eval::{aggregate_metrics, confusion, per_class_metrics, stratified_kfold};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

// per-class F1 straight from the definition, without a confusion matrix
fn f1_direct(truth: &[usize], pred: &[usize], c: usize) -> f64 {
    let tp = truth.iter().zip(pred).filter(|(&t, &p)| t == c && p == c).count() as f64;
    let fp = truth.iter().zip(pred).filter(|(&t, &p)| t != c && p == c).count() as f64;
    let fn_ = truth.iter().zip(pred).filter(|(&t, &p)| t == c && p != c).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

#[test]
fn two_class_example() {
    // truth [0,0,1,1], prediction [0,1,1,1]
    let cm = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
    assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 2]]);
    let m = per_class_metrics(&cm);
    assert!(close(m.f1[0], 2.0 / 3.0) && close(m.f1[1], 0.8));
    let agg = aggregate_metrics(&cm).unwrap();
    assert!(close(agg.weighted_f1, (2.0 / 3.0 + 0.8) / 2.0));
    assert!(close(agg.accuracy, 0.75));
}

fn labelled_pairs() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
    (2usize..6, 1usize..60)
        .prop_flat_map(|(k, n)| (prop::collection::vec(0..k, n), prop::collection::vec(0..k, n), Just(k)))
}

proptest! {
    #[test]
    fn f1_matches_definition((truth, pred, k) in labelled_pairs()) {
        let m = per_class_metrics(&confusion(&truth, &pred, k).unwrap());
        for c in 0..k {
            prop_assert!(close(m.f1[c], f1_direct(&truth, &pred, c)));
            prop_assert!((0.0..=1.0).contains(&m.f1[c]));
        }
    }

    #[test]
    fn invariant_under_sample_permutation((truth, pred, k) in labelled_pairs(), seed in any::<u64>()) {
        let n = truth.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let t2: Vec<usize> = order.iter().map(|&i| truth[i]).collect();
        let p2: Vec<usize> = order.iter().map(|&i| pred[i]).collect();
        let a = aggregate_metrics(&confusion(&truth, &pred, k).unwrap()).unwrap();
        let b = aggregate_metrics(&confusion(&t2, &p2, k).unwrap()).unwrap();
        prop_assert!(close(a.weighted_f1, b.weighted_f1) && close(a.macro_f1, b.macro_f1));
    }

    #[test]
    fn equivariant_under_relabelling((truth, pred, k) in labelled_pairs(), rot in 1usize..5) {
        let perm = |c: usize| (c + rot) % k;
        let t2: Vec<usize> = truth.iter().map(|&c| perm(c)).collect();
        let p2: Vec<usize> = pred.iter().map(|&c| perm(c)).collect();
        let a = per_class_metrics(&confusion(&truth, &pred, k).unwrap());
        let b = per_class_metrics(&confusion(&t2, &p2, k).unwrap());
        for c in 0..k {
            prop_assert!(close(a.f1[c], b.f1[perm(c)]));
        }
        let wa = aggregate_metrics(&confusion(&truth, &pred, k).unwrap()).unwrap();
        let wb = aggregate_metrics(&confusion(&t2, &p2, k).unwrap()).unwrap();
        prop_assert!(close(wa.weighted_f1, wb.weighted_f1));
    }

    #[test]
    fn folds_partition_and_stratify(labels in prop::collection::vec(0usize..4, 10..200), k in 2usize..6, seed in any::<u64>()) {
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(plan.test.len(), k);
        let mut seen = vec![0u32; labels.len()];
        for (test, train) in plan.test.iter().zip(&plan.train) {
            prop_assert_eq!(test.len() + train.len(), labels.len());
            for &i in test { seen[i] += 1; }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        for c in 0..4 {
            let counts: Vec<usize> = plan.test.iter().map(|t| t.iter().filter(|&&i| labels[i] == c).count()).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} fold counts {:?}", c, counts);
        }
    }
}
