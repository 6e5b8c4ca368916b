//! Domain types shared by the learners, the ensemble and the evaluation code.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LccdeError, Result};

/// Dense class index in `0..n_classes`.
pub type ClassId = usize;

/// One of the three base learners. The discriminant is the model slot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Leaf-wise growth on gradient-based one-side samples.
    GossLeafwise = 0,
    /// Level-wise growth with second-order regularized gain.
    Depthwise = 1,
    /// Symmetric trees: one shared split per level.
    Oblivious = 2,
}

/// Slot index of a base learner inside an ensemble.
pub type ModelIndex = Variant;

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::GossLeafwise, Variant::Depthwise, Variant::Oblivious];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Variant> {
        Variant::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::GossLeafwise => "goss_leafwise",
            Variant::Depthwise => "depthwise",
            Variant::Oblivious => "oblivious",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s.replace('-', "_").as_str() {
            "goss_leafwise" | "goss" | "0" => Some(Variant::GossLeafwise),
            "depthwise" | "1" => Some(Variant::Depthwise),
            "oblivious" | "2" => Some(Variant::Oblivious),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rectangular numeric feature matrix with dense integer labels.
///
/// Rows are stored individually so that malformed input can be represented
/// and reported by [`validate_dataset`] instead of panicking at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<ClassId>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = Dataset { features, labels, feature_names, class_names };
        let violations = validate_dataset(&d);
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(LccdeError::InvalidDataset(violations))
        }
    }

    /// Generic feature names `f0..f{n-1}`.
    pub fn default_feature_names(n_features: usize) -> Vec<String> {
        (0..n_features).map(|i| format!("f{i}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    /// Number of distinct labels actually present.
    pub fn classes_present(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            if l < counts.len() {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Rows at `indices`, in the given order. Class and feature names are kept
    /// even when some classes no longer appear.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }
}

/// One broken dataset invariant, with coordinates where they apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoRows,
    TooFewClasses { n_classes: usize },
    LabelCount { rows: usize, labels: usize },
    RowWidth { row: usize, expected: usize, actual: usize },
    NonFinite { row: usize, column: usize, value: f64 },
    LabelOutOfRange { row: usize, label: usize, n_classes: usize },
    EmptyClassName { class: usize },
    DuplicateClassName { class: usize, name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoRows => write!(f, "dataset has no rows"),
            Violation::TooFewClasses { n_classes } => {
                write!(f, "dataset declares {n_classes} class(es), need at least 2")
            }
            Violation::LabelCount { rows, labels } => {
                write!(f, "{rows} feature rows but {labels} labels")
            }
            Violation::RowWidth { row, expected, actual } => {
                write!(f, "row {row} has {actual} entries, expected {expected}")
            }
            Violation::NonFinite { row, column, value } => {
                write!(f, "non-finite value {value} at row {row}, column {column}")
            }
            Violation::LabelOutOfRange { row, label, n_classes } => {
                write!(f, "label {label} at row {row} out of range for {n_classes} classes")
            }
            Violation::EmptyClassName { class } => write!(f, "class {class} has an empty name"),
            Violation::DuplicateClassName { class, name } => {
                write!(f, "class {class} repeats the name {name:?}")
            }
        }
    }
}

/// Lists every broken invariant of `d`; empty means the dataset is well formed.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.features.is_empty() {
        out.push(Violation::NoRows);
    }
    let n = d.n_classes();
    if n < 2 {
        out.push(Violation::TooFewClasses { n_classes: n });
    }
    if d.labels.len() != d.features.len() {
        out.push(Violation::LabelCount { rows: d.features.len(), labels: d.labels.len() });
    }
    let width = d.n_features();
    for (r, row) in d.features.iter().enumerate() {
        if row.len() != width {
            out.push(Violation::RowWidth { row: r, expected: width, actual: row.len() });
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFinite { row: r, column: c, value: v });
            }
        }
    }
    for (r, &l) in d.labels.iter().enumerate() {
        if l >= n {
            out.push(Violation::LabelOutOfRange { row: r, label: l, n_classes: n });
        }
    }
    let mut seen = HashSet::new();
    for (c, name) in d.class_names.iter().enumerate() {
        if name.is_empty() {
            out.push(Violation::EmptyClassName { class: c });
        } else if !seen.insert(name.as_str()) {
            out.push(Violation::DuplicateClassName { class: c, name: name.clone() });
        }
    }
    out
}

/// Class decision of a single model for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_id: ClassId,
    pub confidence: f64,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    /// Wraps a probability vector; the lowest index wins exact ties.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Prediction {
        let class_id = argmax(&probabilities);
        Prediction { class_id, confidence: probabilities[class_id], probabilities }
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Leader base model for every class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderMap {
    pub leaders: Vec<ModelIndex>,
}

impl LeaderMap {
    pub fn new(leaders: Vec<ModelIndex>) -> Self {
        LeaderMap { leaders }
    }

    pub fn leader(&self, class: ClassId) -> ModelIndex {
        self.leaders[class]
    }

    pub fn n_classes(&self) -> usize {
        self.leaders.len()
    }
}
