//! Gradient-boosted decision tree base learners.
//!
//! Three growth variants share one softmax boosting loop; see [`fit`].

mod config;
mod forest;
mod goss;
mod grow;
mod split;
mod tree;

pub use config::BoosterConfig;
pub use forest::{fit, TrainedForest};
pub use goss::{goss_counts, goss_sample, GossSample};
pub use grow::{grow_greedy_tree, grow_oblivious_tree, GrowParams, GrowthPolicy};
pub use split::{find_best_split, leaf_weight, split_gain, GradientPair, SplitCandidate};
pub use tree::{FeatureMatrix, Node, Tree};
