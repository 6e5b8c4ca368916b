//! Leader selection and confidence-arbitrated prediction over the three
//! base learners.

use std::fmt;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LccdeError, Result};
use crate::eval::{confusion, per_class_metrics, stratified_kfold};
use crate::learners::{fit, BoosterConfig, TrainedForest};
use crate::types::{validate_dataset, ClassId, Dataset, LeaderMap, ModelIndex, Prediction, Variant};

/// Two F1 scores closer than this count as tied.
pub const F1_TIE_TOLERANCE: f64 = 1e-6;

/// Per-class cross-validated F1 of each base model and the time spent
/// training it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderSelectionEvidence {
    /// `f1[model][class]`, in `[0, 1]`.
    pub f1: [Vec<f64>; 3],
    /// Total training wall time of each model, seconds.
    pub fit_seconds: [f64; 3],
}

impl LeaderSelectionEvidence {
    pub fn n_classes(&self) -> usize {
        self.f1[0].len()
    }
}

/// Picks each class's leader: the model with the highest F1; among models
/// within [`F1_TIE_TOLERANCE`] of the best, the fastest; then the lowest index.
pub fn select_leaders(evidence: &LeaderSelectionEvidence) -> LeaderMap {
    let leaders = (0..evidence.n_classes())
        .map(|c| {
            let best = Variant::ALL.iter().map(|v| evidence.f1[v.index()][c]).fold(f64::NEG_INFINITY, f64::max);
            Variant::ALL
                .into_iter()
                .filter(|v| evidence.f1[v.index()][c] >= best - F1_TIE_TOLERANCE)
                .min_by(|a, b| {
                    evidence.fit_seconds[a.index()].total_cmp(&evidence.fit_seconds[b.index()]).then(a.cmp(b))
                })
                .expect("at least one model attains the maximum")
        })
        .collect();
    LeaderMap::new(leaders)
}

/// Which decision rule produced the final class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// All three models predicted the same class.
    Unanimous,
    /// All predictions differ and exactly one model leads its predicted class.
    AllDifferentSingleMatch,
    /// All predictions differ; decided by the highest confidence.
    AllDifferentConfidence,
    /// Two models agree; the leader of the majority class decides.
    TwoAgree,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Unanimous => "unanimous",
            Branch::AllDifferentSingleMatch => "all_different_single_match",
            Branch::AllDifferentConfidence => "all_different_confidence",
            Branch::TwoAgree => "two_agree",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Record of how one sample was arbitrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationTrace {
    pub branch: Branch,
    /// Class predicted by each base model, by model index.
    pub base_classes: [ClassId; 3],
    pub confidences: [f64; 3],
    /// Models that lead the class they predicted (all-different branches only).
    pub matched_models: Vec<ModelIndex>,
    /// Model whose prediction was adopted; `None` when unanimous.
    pub chosen_model: Option<ModelIndex>,
    pub final_class: ClassId,
}

// Highest confidence among `candidates`, first candidate wins ties.
fn most_confident(candidates: &[ModelIndex], confidences: &[f64; 3]) -> ModelIndex {
    let mut best = candidates[0];
    for &m in &candidates[1..] {
        if confidences[m.index()] > confidences[best.index()] {
            best = m;
        }
    }
    best
}

/// Combines the three base decisions into one class.
///
/// * unanimous: the agreed class;
/// * all pairwise different: a model "matches" when it is the leader of the
///   class it predicted. One match decides; otherwise the most confident
///   model among the matches (or among all three when none match) decides;
/// * two agree: the leader of the majority class decides, with its own
///   predicted class even if it was the dissenting model.
///
/// Confidence ties go to the lowest model index.
pub fn arbitrate(classes: [ClassId; 3], confidences: [f64; 3], leaders: &LeaderMap) -> ArbitrationTrace {
    let [a, b, c] = classes;
    let trace = |branch, matched_models, chosen_model: Option<ModelIndex>, final_class| ArbitrationTrace {
        branch,
        base_classes: classes,
        confidences,
        matched_models,
        chosen_model,
        final_class,
    };

    if a == b && b == c {
        return trace(Branch::Unanimous, Vec::new(), None, a);
    }
    if a != b && b != c && a != c {
        let matched: Vec<ModelIndex> =
            Variant::ALL.into_iter().filter(|&m| leaders.leader(classes[m.index()]) == m).collect();
        if matched.len() == 1 {
            let m = matched[0];
            return trace(Branch::AllDifferentSingleMatch, matched, Some(m), classes[m.index()]);
        }
        let pool: &[ModelIndex] = if matched.is_empty() { &Variant::ALL } else { &matched };
        let m = most_confident(pool, &confidences);
        return trace(Branch::AllDifferentConfidence, matched, Some(m), classes[m.index()]);
    }
    let majority = if a == b || a == c { a } else { b };
    let leader = leaders.leader(majority);
    trace(Branch::TwoAgree, Vec::new(), Some(leader), classes[leader.index()])
}

/// Training-time evidence and settings kept with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub evidence: LeaderSelectionEvidence,
    pub folds: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Three trained base learners, indexed by [`Variant::index`], plus the
/// per-class leader map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LccdeModel {
    pub forests: [TrainedForest; 3],
    pub leader_map: LeaderMap,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub report: SelectionReport,
}

impl LccdeModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn forest(&self, m: ModelIndex) -> &TrainedForest {
        &self.forests[m.index()]
    }

    /// Checks that the parts of a model agree with each other.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.n_classes();
        let f = self.n_features();
        let bad = |msg: String| Err(LccdeError::ModelInconsistent(msg));
        for (i, forest) in self.forests.iter().enumerate() {
            if forest.variant.index() != i {
                return bad(format!("slot {i} holds a {} forest", forest.variant));
            }
            if forest.n_classes != n || forest.n_features != f || forest.base_score.len() != n {
                return bad(format!(
                    "forest {} has shape {}x{}, model has {f} features and {n} classes",
                    forest.variant, forest.n_features, forest.n_classes
                ));
            }
            if forest.trees.iter().any(|round| round.len() != n) {
                return bad(format!("forest {} has a round without one tree per class", forest.variant));
            }
            if !forest.iter_trees().all(|t| t.is_well_formed(f)) {
                return bad(format!("forest {} contains a malformed tree", forest.variant));
            }
        }
        if self.leader_map.n_classes() != n {
            return bad(format!("leader map covers {} classes, model has {n}", self.leader_map.n_classes()));
        }
        if self.report.evidence.f1.iter().any(|col| col.len() != n) {
            return bad("selection evidence has the wrong number of classes".into());
        }
        Ok(())
    }
}

/// Trains the ensemble: stratified k-fold cross-validation of all three
/// variants, leader selection from the pooled out-of-fold per-class F1, then a
/// refit of every variant on the full training set.
///
/// `configs` is indexed by [`Variant::index`].
pub fn train_lccde(d: &Dataset, configs: &[BoosterConfig; 3], folds: usize, seed: u64) -> Result<LccdeModel> {
    let violations = validate_dataset(d);
    if !violations.is_empty() {
        return Err(LccdeError::InvalidDataset(violations));
    }
    for c in configs {
        c.validate()?;
    }
    let present = d.classes_present();
    if present < 2 {
        return Err(LccdeError::DegenerateLabels { present });
    }
    let plan = stratified_kfold(&d.labels, folds, seed)?;
    for w in &plan.warnings {
        warn!("{w}");
    }

    let n = d.n_classes();
    let mut f1: [Vec<f64>; 3] = Default::default();
    let mut fit_seconds = [0.0f64; 3];
    for v in Variant::ALL {
        let mut oof = vec![0usize; d.n_rows()];
        for (test_rows, train_rows) in plan.test.iter().zip(&plan.train) {
            let forest = fit(&configs[v.index()], v, &d.select(train_rows))?;
            fit_seconds[v.index()] += forest.fit_seconds;
            for &i in test_rows {
                oof[i] = forest.predict_proba(d.row(i))?.class_id;
            }
        }
        let cm = confusion(&d.labels, &oof, n)?;
        f1[v.index()] = per_class_metrics(&cm).f1;
    }
    let evidence = LeaderSelectionEvidence { f1, fit_seconds };
    let leader_map = select_leaders(&evidence);

    let fitted: Vec<TrainedForest> =
        Variant::ALL.iter().map(|&v| fit(&configs[v.index()], v, d)).collect::<Result<_>>()?;
    let forests: [TrainedForest; 3] = fitted.try_into().expect("three variants");

    Ok(LccdeModel {
        forests,
        leader_map,
        class_names: d.class_names.clone(),
        feature_names: d.feature_names.clone(),
        report: SelectionReport { evidence, folds, seed, warnings: plan.warnings },
    })
}

/// Arbitrated prediction for one row. The returned [`Prediction`] is the one
/// made by the deciding model (the agreed class's leader when unanimous).
pub fn predict_sample(m: &LccdeModel, x: &[f64]) -> Result<(Prediction, ArbitrationTrace)> {
    let base: Vec<Prediction> = m.forests.iter().map(|f| f.predict_proba(x)).collect::<Result<_>>()?;
    let classes = [base[0].class_id, base[1].class_id, base[2].class_id];
    let confidences = [base[0].confidence, base[1].confidence, base[2].confidence];
    let trace = arbitrate(classes, confidences, &m.leader_map);
    let source = trace.chosen_model.unwrap_or_else(|| m.leader_map.leader(trace.final_class));
    let mut base = base;
    let prediction = base.swap_remove(source.index());
    debug_assert_eq!(prediction.class_id, trace.final_class);
    Ok((prediction, trace))
}

/// [`predict_sample`] over many rows, evaluated in parallel, in row order.
pub fn predict_batch(m: &LccdeModel, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    rows.par_iter().map(|x| predict_sample(m, x).map(|(p, _)| p)).collect()
}

/// Like [`predict_batch`] but keeps the arbitration traces.
pub fn predict_batch_traced(m: &LccdeModel, rows: &[Vec<f64>]) -> Result<Vec<(Prediction, ArbitrationTrace)>> {
    rows.par_iter().map(|x| predict_sample(m, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variant::*;

    fn ev(f1: [Vec<f64>; 3], fit_seconds: [f64; 3]) -> LeaderSelectionEvidence {
        LeaderSelectionEvidence { f1, fit_seconds }
    }

    #[test]
    fn strict_maximum_wins() {
        let e = ev([vec![0.99222], vec![0.99351], vec![0.99094]], [14.3, 44.7, 73.7]);
        assert_eq!(select_leaders(&e).leaders, vec![Depthwise]);
    }

    #[test]
    fn ties_go_to_fastest_then_lowest_index() {
        let e = ev([vec![1.0], vec![1.0], vec![1.0]], [10.7, 45.3, 88.6]);
        assert_eq!(select_leaders(&e).leaders, vec![GossLeafwise]);
        let e = ev([vec![0.5], vec![0.5], vec![0.5]], [1.0, 1.0, 1.0]);
        assert_eq!(select_leaders(&e).leaders, vec![GossLeafwise]);
        let e = ev([vec![0.5], vec![0.5 + 5e-7], vec![0.4]], [3.0, 2.0, 1.0]);
        assert_eq!(select_leaders(&e).leaders, vec![Depthwise]);
    }

    fn leaders(v: &[Variant]) -> LeaderMap {
        LeaderMap::new(v.to_vec())
    }

    #[test]
    fn unanimous() {
        let t = arbitrate([2, 2, 2], [0.1, 0.9, 0.5], &leaders(&[Oblivious, Oblivious, Depthwise]));
        assert_eq!((t.branch, t.final_class, t.chosen_model), (Branch::Unanimous, 2, None));
        assert!(t.matched_models.is_empty());
    }

    #[test]
    fn two_matches_use_matched_confidence() {
        // classes A=0, B=1, C=2; LM_A = 1, LM_B = 1, LM_C = 2
        let lm = leaders(&[Depthwise, Depthwise, Oblivious]);
        let t = arbitrate([0, 1, 2], [0.5, 0.9, 0.7], &lm);
        assert_eq!(t.branch, Branch::AllDifferentConfidence);
        assert_eq!(t.matched_models, vec![Depthwise, Oblivious]);
        assert_eq!(t.final_class, 1);
    }

    #[test]
    fn zero_matches_fall_back_to_all_models() {
        // LM_A = 1, LM_B = 0, LM_C = 0
        let lm = leaders(&[Depthwise, GossLeafwise, GossLeafwise]);
        let t = arbitrate([0, 1, 2], [0.4, 0.8, 0.6], &lm);
        assert!(t.matched_models.is_empty());
        assert_eq!((t.branch, t.final_class, t.chosen_model), (Branch::AllDifferentConfidence, 1, Some(Depthwise)));
    }

    #[test]
    fn single_match_decides_regardless_of_confidence() {
        let lm = leaders(&[GossLeafwise, GossLeafwise, GossLeafwise]);
        let t = arbitrate([0, 1, 2], [0.4, 0.99, 0.9], &lm);
        assert_eq!((t.branch, t.final_class), (Branch::AllDifferentSingleMatch, 0));
    }

    #[test]
    fn dissenting_leader_of_majority_wins() {
        // classes (A, A, B), LM_A = model 2 which predicted B
        let lm = leaders(&[Oblivious, GossLeafwise]);
        let t = arbitrate([0, 0, 1], [0.9, 0.9, 0.6], &lm);
        assert_eq!((t.branch, t.final_class, t.chosen_model), (Branch::TwoAgree, 1, Some(Oblivious)));
        // the A,B,A pattern is also a two-agree case
        let t = arbitrate([0, 1, 0], [0.9, 0.9, 0.6], &leaders(&[Depthwise, GossLeafwise]));
        assert_eq!((t.branch, t.final_class), (Branch::TwoAgree, 1));
    }

    #[test]
    fn confidence_ties_prefer_lower_index() {
        let lm = leaders(&[Depthwise, GossLeafwise, GossLeafwise]);
        let t = arbitrate([0, 1, 2], [0.7, 0.7, 0.7], &lm);
        assert_eq!(t.chosen_model, Some(GossLeafwise));
        let lm = leaders(&[GossLeafwise, Depthwise, Oblivious]);
        let t = arbitrate([0, 1, 2], [0.9, 0.6, 0.6], &lm);
        // all three match; model 0 has the highest confidence
        assert_eq!(t.matched_models.len(), 3);
        assert_eq!(t.final_class, 0);
    }
}
