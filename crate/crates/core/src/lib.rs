//! Leader-class and confidence decision ensemble (LCCDE) for intrusion
//! detection.
//!
//! Three gradient-boosted tree learners are trained side by side. For each
//! class the learner with the best cross-validated F1 becomes that class's
//! leader, and predictions are arbitrated between the learners using the
//! leader map and prediction confidence.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod learners;
pub mod persist;
pub mod synth;
pub mod types;

pub use ensemble::{
    arbitrate, predict_batch, predict_sample, select_leaders, train_lccde, ArbitrationTrace, Branch, LccdeModel,
    LeaderSelectionEvidence, SelectionReport,
};
pub use error::{LccdeError, Result};
pub use learners::{fit, BoosterConfig, TrainedForest};
pub use types::{validate_dataset, ClassId, Dataset, LeaderMap, ModelIndex, Prediction, Variant, Violation};
