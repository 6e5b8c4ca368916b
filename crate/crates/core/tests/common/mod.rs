#![allow(dead_code)]

use lccde::Dataset;

/// Line-by-line transcription of the LCCDE prediction procedure for one
/// sample, kept independent of the library's `arbitrate`.
///
/// `classes[j]` and `conf[j]` are model j's predicted class and confidence;
/// `leader[c]` is the index of the leader model of class c.
pub fn reference_decision(classes: [usize; 3], conf: [f64; 3], leader: &[usize]) -> usize {
    let (l1, l2, l3) = (classes[0], classes[1], classes[2]);
    if l1 == l2 && l2 == l3 {
        return l1;
    }
    if l1 != l2 && l2 != l3 && l1 != l3 {
        let mut l_list: Vec<usize> = Vec::new();
        let mut p_list: Vec<f64> = Vec::new();
        for j in 0..3 {
            if j == leader[classes[j]] {
                l_list.push(classes[j]);
                p_list.push(conf[j]);
            }
        }
        if l_list.len() == 1 {
            return l_list[0];
        }
        if l_list.is_empty() {
            l_list = vec![l1, l2, l3];
            p_list = vec![conf[0], conf[1], conf[2]];
        }
        let mut p_max = p_list[0];
        for &p in &p_list[1..] {
            if p > p_max {
                p_max = p;
            }
        }
        for (k, &p) in p_list.iter().enumerate() {
            if p == p_max {
                return l_list[k];
            }
        }
        unreachable!("p_max is taken from p_list");
    }
    let n = if l1 == l2 || l1 == l3 { l1 } else { l2 };
    classes[leader[n]]
}

/// Nearest-centroid classifier used as an independent accuracy oracle.
pub fn nearest_centroid_accuracy(train: &Dataset, test: &Dataset) -> f64 {
    let n = train.n_classes();
    let f = train.n_features();
    let mut sums = vec![vec![0.0; f]; n];
    let mut counts = vec![0usize; n];
    for (row, &y) in train.features.iter().zip(&train.labels) {
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(row) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> =
        sums.iter().zip(&counts).map(|(s, &c)| s.iter().map(|v| v / c.max(1) as f64).collect()).collect();
    let correct = test
        .features
        .iter()
        .zip(&test.labels)
        .filter(|(row, &y)| {
            let d = |c: &Vec<f64>| c.iter().zip(row.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let best = (0..n).min_by(|&a, &b| d(&centroids[a]).total_cmp(&d(&centroids[b]))).unwrap();
            best == y
        })
        .count();
    correct as f64 / test.n_rows() as f64
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}
