//! Stratified splitting and classification metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LccdeError, Result};
use crate::types::{ClassId, Dataset};

/// Test folds of a k-fold cross-validation and their training complements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub test: Vec<Vec<usize>>,
    pub train: Vec<Vec<usize>>,
    /// Classes with fewer samples than folds.
    pub warnings: Vec<String>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.test.len()
    }
}

fn rows_by_class(labels: &[ClassId]) -> Vec<Vec<usize>> {
    let n = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut by_class = vec![Vec::new(); n];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

/// Stratified k-fold assignment.
///
/// Rows of each class are shuffled with `seed` and dealt round-robin; the
/// dealing position carries over from one class to the next so that overall
/// fold sizes also differ by at most one. Folds are sorted by row index.
pub fn stratified_kfold(labels: &[ClassId], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(LccdeError::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(LccdeError::InvalidConfig(format!("cannot split {} rows into {k} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = vec![Vec::new(); k];
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (class, mut rows) in rows_by_class(labels).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            warnings.push(format!(
                "class {class} has {} sample(s), fewer than {k} folds; it is absent from some folds",
                rows.len()
            ));
        }
        rows.shuffle(&mut rng);
        for r in rows {
            test[next].push(r);
            next = (next + 1) % k;
        }
    }
    for f in &mut test {
        f.sort_unstable();
    }
    let train = (0..k)
        .map(|i| {
            let mut t: Vec<usize> =
                test.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, f)| f.iter().copied()).collect();
            t.sort_unstable();
            t
        })
        .collect();
    Ok(FoldPlan { test, train, warnings })
}

/// Stratified train/test split. Each class contributes
/// `round(test_fraction * count)` rows to the test side, always leaving at
/// least one row for training. Returns `(train, test, warnings)`.
pub fn holdout_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset, Vec<String>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LccdeError::InvalidConfig(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut warnings = Vec::new();
    for (class, mut rows) in rows_by_class(&d.labels).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() == 1 {
            warnings.push(format!(
                "class {class} ({}) has a single sample; kept in the training split",
                d.class_names.get(class).map_or("?", String::as_str)
            ));
        }
        rows.shuffle(&mut rng);
        let n_test = ((test_fraction * rows.len() as f64).round() as usize).min(rows.len() - 1);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.select(&train), d.select(&test), warnings))
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

pub fn confusion(y_true: &[ClassId], y_pred: &[ClassId], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(LccdeError::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(LccdeError::LabelOutOfRange { label, n_classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Per-class precision, recall and F1; undefined ratios are reported as 0.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> ClassMetrics {
    let n = cm.n_classes();
    let mut m = ClassMetrics {
        precision: Vec::with_capacity(n),
        recall: Vec::with_capacity(n),
        f1: Vec::with_capacity(n),
        support: Vec::with_capacity(n),
    };
    for c in 0..n {
        let tp = cm.counts[c][c];
        let p = ratio(tp, cm.col_sum(c));
        let r = ratio(tp, cm.row_sum(c));
        m.precision.push(p);
        m.recall.push(r);
        m.f1.push(f1_score(p, r));
        m.support.push(cm.row_sum(c));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub macro_f1: f64,
}

/// Accuracy, support-weighted precision/recall/F1 and unweighted macro F1.
pub fn aggregate_metrics(cm: &ConfusionMatrix) -> Result<AggregateMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(LccdeError::EmptyMatrix);
    }
    let m = per_class_metrics(cm);
    let weighted = |v: &[f64]| v.iter().zip(&m.support).map(|(&x, &s)| x * s as f64).sum::<f64>() / total as f64;
    Ok(AggregateMetrics {
        accuracy: cm.trace() as f64 / total as f64,
        weighted_precision: weighted(&m.precision),
        weighted_recall: weighted(&m.recall),
        weighted_f1: weighted(&m.f1),
        macro_f1: m.f1.iter().sum::<f64>() / m.f1.len() as f64,
    })
}
