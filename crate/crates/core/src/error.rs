use std::io;

use thiserror::Error;

use crate::types::Violation;

pub type Result<T, E = LccdeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LccdeError {
    #[error("invalid dataset: {}", join_violations(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("degenerate labels: training data contains {present} distinct class(es), need at least 2")]
    DegenerateLabels { present: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} true labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("metrics undefined for an empty confusion matrix")]
    EmptyMatrix,

    #[error("unknown class name {0:?}")]
    UnknownClass(String),

    #[error("label column {name:?} not found; available columns: {}", .available.join(", "))]
    MissingLabelColumn { name: String, available: Vec<String> },

    #[error("no usable rows in input ({rows_read} read)")]
    NoUsableRows { rows_read: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unsupported model format version {found} (supported: {supported})")]
    ModelVersion { found: i64, supported: i64 },

    #[error("model file parse error at byte {offset}: {message}")]
    ModelParse { offset: usize, message: String },

    #[error("model file checksum mismatch (expected {expected}, computed {computed})")]
    ModelChecksum { expected: String, computed: String },

    #[error("model file is inconsistent: {0}")]
    ModelInconsistent(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
