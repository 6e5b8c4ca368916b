use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::BoosterConfig;
use super::goss::goss_sample;
use super::grow::{grow_greedy_tree, grow_oblivious_tree, GrowParams, GrowthPolicy};
use super::split::GradientPair;
use super::tree::{FeatureMatrix, Tree};
use crate::error::{LccdeError, Result};
use crate::types::{validate_dataset, Dataset, Prediction, Variant};

/// A fitted one-vs-rest softmax booster: `trees[round][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForest {
    pub variant: Variant,
    pub n_features: usize,
    pub n_classes: usize,
    pub base_score: Vec<f64>,
    pub trees: Vec<Vec<Tree>>,
    pub config: BoosterConfig,
    pub fit_seconds: f64,
    /// Mean training cross-entropy before the first round and after each round.
    pub train_loss: Vec<f64>,
}

/// Mixes the booster seed with the round number so every round gets its own
/// GOSS stream (splitmix64 finaliser).
fn round_seed(seed: u64, round: usize) -> u64 {
    let mut z = seed ^ (round as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

fn mean_loss(scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    scores.iter().zip(labels).map(|(s, &y)| cross_entropy(s, y)).sum::<f64>() / labels.len() as f64
}

/// Fits one boosted-tree base learner.
///
/// Every round grows one regression tree per class on the softmax
/// cross-entropy gradients `g = p - y`, `h = p(1 - p)`. The variant decides
/// how trees are grown:
///
/// * `GossLeafwise`: best-first growth bounded by `max_leaves`, on a
///   gradient-based one-side sample of the rows.
/// * `Depthwise`: level-wise growth bounded by `max_depth` on all rows.
/// * `Oblivious`: symmetric trees of depth up to `max_depth` on all rows.
pub fn fit(config: &BoosterConfig, variant: Variant, d: &Dataset) -> Result<TrainedForest> {
    let violations = validate_dataset(d);
    if !violations.is_empty() {
        return Err(LccdeError::InvalidDataset(violations));
    }
    config.validate()?;
    let present = d.classes_present();
    if present < 2 {
        return Err(LccdeError::DegenerateLabels { present });
    }

    let start = Instant::now();
    let n_classes = d.n_classes();
    let n_rows = d.n_rows();
    let matrix = FeatureMatrix::from_dataset(d);
    let all_rows: Vec<usize> = (0..n_rows).collect();
    let base_score = vec![0.0; n_classes];
    let mut scores: Vec<Vec<f64>> = vec![base_score.clone(); n_rows];
    let mut train_loss = Vec::with_capacity(config.rounds + 1);
    train_loss.push(mean_loss(&scores, &d.labels));
    let mut trees = Vec::with_capacity(config.rounds);

    let greedy = |policy: GrowthPolicy| GrowParams {
        max_depth: config.max_depth,
        max_leaves: if policy == GrowthPolicy::BestFirst { config.max_leaves } else { usize::MAX },
        lambda: config.l2_reg,
        min_child_hessian: config.min_child_hessian,
    };

    for round in 0..config.rounds {
        let probs: Vec<Vec<f64>> = scores
            .iter()
            .map(|s| {
                let mut p = s.clone();
                softmax_in_place(&mut p);
                p
            })
            .collect();

        let class_pairs = |class: usize| -> Vec<GradientPair> {
            (0..n_rows).map(|i| GradientPair::softmax(probs[i][class], d.labels[i] == class)).collect()
        };
        // one sample per round, shared by every class tree, ranked by the
        // summed gradient magnitude over classes
        let sample = match variant {
            Variant::GossLeafwise => {
                let magnitudes: Vec<f64> = (0..n_rows)
                    .map(|i| (0..n_classes).map(|k| (probs[i][k] - f64::from(u8::from(d.labels[i] == k))).abs()).sum())
                    .collect();
                Some(goss_sample(
                    &magnitudes,
                    config.goss_top_fraction,
                    config.goss_rand_fraction,
                    round_seed(config.seed, round),
                )?)
            }
            _ => None,
        };

        let round_trees: Vec<Tree> = (0..n_classes)
            .into_par_iter()
            .map(|class| {
                let pairs = class_pairs(class);
                let mut tree = match variant {
                    Variant::GossLeafwise => {
                        let sample = sample.as_ref().expect("sampled above");
                        let mut weighted = vec![GradientPair::default(); n_rows];
                        for (&i, &w) in sample.indices.iter().zip(&sample.weights) {
                            weighted[i] = pairs[i].scaled(w);
                        }
                        let policy = GrowthPolicy::BestFirst;
                        grow_greedy_tree(&matrix, &sample.indices, &weighted, &greedy(policy), policy)
                    }
                    Variant::Depthwise => {
                        let policy = GrowthPolicy::LevelWise;
                        grow_greedy_tree(&matrix, &all_rows, &pairs, &greedy(policy), policy)
                    }
                    Variant::Oblivious => grow_oblivious_tree(&matrix, &pairs, config.max_depth, config.l2_reg),
                };
                tree.scale_leaves(config.learning_rate);
                tree
            })
            .collect();

        for (row, s) in d.features.iter().zip(scores.iter_mut()) {
            for (k, t) in round_trees.iter().enumerate() {
                s[k] += t.predict(row);
            }
        }
        train_loss.push(mean_loss(&scores, &d.labels));
        trees.push(round_trees);
    }

    Ok(TrainedForest {
        variant,
        n_features: d.n_features(),
        n_classes,
        base_score,
        trees,
        config: config.clone(),
        fit_seconds: start.elapsed().as_secs_f64(),
        train_loss,
    })
}

impl TrainedForest {
    /// A forest without trees: every prediction is the softmax of `base_score`.
    pub fn constant(variant: Variant, n_features: usize, base_score: Vec<f64>) -> TrainedForest {
        TrainedForest {
            variant,
            n_features,
            n_classes: base_score.len(),
            base_score,
            trees: Vec::new(),
            config: BoosterConfig::default(),
            fit_seconds: 0.0,
            train_loss: Vec::new(),
        }
    }

    pub fn rounds(&self) -> usize {
        self.trees.len()
    }

    pub fn iter_trees(&self) -> impl Iterator<Item = &Tree> {
        self.trees.iter().flatten()
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(LccdeError::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        Ok(())
    }

    /// Raw additive scores per class.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        let mut s = self.base_score.clone();
        for round in &self.trees {
            for (k, t) in round.iter().enumerate() {
                s[k] += t.predict(x);
            }
        }
        Ok(s)
    }

    /// Class probabilities for one feature row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Prediction> {
        let mut s = self.raw_scores(x)?;
        softmax_in_place(&mut s);
        Ok(Prediction::from_probabilities(s))
    }

    /// Checks the structural bound of this forest's variant on every tree.
    pub fn structure_holds(&self) -> bool {
        self.iter_trees().all(|t| {
            t.is_well_formed(self.n_features)
                && match self.variant {
                    Variant::Depthwise => t.depth() <= self.config.max_depth,
                    Variant::GossLeafwise => {
                        t.n_leaves() <= self.config.max_leaves && t.depth() <= self.config.max_depth
                    }
                    Variant::Oblivious => t.shares_splits_per_level() && t.n_leaves() <= 1 << self.config.max_depth,
                }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            features.push(vec![i as f64, ((i * 37) % 11) as f64]);
            labels.push(usize::from(i >= 20));
        }
        Dataset::new(features, labels, Dataset::default_feature_names(2), vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn constant_forest_is_uniform() {
        let f = TrainedForest::constant(Variant::Depthwise, 2, vec![0.0; 4]);
        let p = f.predict_proba(&[1.0, 2.0]).unwrap();
        assert_eq!(p.class_id, 0);
        assert!(p.probabilities.iter().all(|&q| (q - 0.25).abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = TrainedForest::constant(Variant::Depthwise, 3, vec![0.0; 2]);
        match f.predict_proba(&[1.0]) {
            Err(LccdeError::DimensionMismatch { expected: 3, actual: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut d = tiny();
        d.labels = vec![0; d.n_rows()];
        let err = fit(&BoosterConfig::default(), Variant::Depthwise, &d).unwrap_err();
        assert!(matches!(err, LccdeError::DegenerateLabels { present: 1 }));
        assert!(err.to_string().contains("degenerate labels"));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut d = tiny();
        d.features[3][0] = f64::INFINITY;
        let err = fit(&BoosterConfig::default(), Variant::Oblivious, &d).unwrap_err();
        assert!(err.to_string().contains("invalid dataset"));
    }

    #[test]
    fn single_split_leaf_weight_is_scaled_newton_step() {
        // Two rows per class split cleanly by feature 0, first round from p = 0.5.
        let d = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1, 1],
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let cfg =
            BoosterConfig { rounds: 1, max_depth: 1, min_child_hessian: 0.0, learning_rate: 0.3, ..Default::default() };
        let f = fit(&cfg, Variant::Depthwise, &d).unwrap();
        let t = &f.trees[0][0];
        assert_eq!(t.nodes[0].threshold, 1.5);
        // class 0 on the left: G = 2 * (0.5 - 1) = -1, H = 2 * 0.25 = 0.5
        let expected = 0.3 * (1.0 / (0.5 + 1.0));
        assert!((t.nodes[t.nodes[0].left].leaf_weight - expected).abs() < 1e-12);
        assert!((t.nodes[t.nodes[0].right].leaf_weight + expected).abs() < 1e-12);
    }

    #[test]
    fn every_variant_learns_a_threshold() {
        let d = tiny();
        for v in Variant::ALL {
            let cfg = BoosterConfig { rounds: 30, ..Default::default() };
            let f = fit(&cfg, v, &d).unwrap();
            assert!(f.structure_holds(), "{v}");
            assert_eq!(f.predict_proba(&[2.0, 3.0]).unwrap().class_id, 0, "{v}");
            assert_eq!(f.predict_proba(&[35.0, 3.0]).unwrap().class_id, 1, "{v}");
            assert_eq!(f.train_loss.len(), 31);
        }
    }

    #[test]
    fn goss_trees_touch_sampled_rows_only() {
        let d = tiny();
        let cfg = BoosterConfig { rounds: 5, goss_top_fraction: 0.25, goss_rand_fraction: 0.25, ..Default::default() };
        let f = fit(&cfg, Variant::GossLeafwise, &d).unwrap();
        assert!(f.iter_trees().all(|t| t.n_samples == 20));
    }

    #[test]
    fn round_seeds_differ() {
        assert_ne!(round_seed(0, 0), round_seed(0, 1));
        assert_ne!(round_seed(1, 0), round_seed(0, 0));
    }
}
