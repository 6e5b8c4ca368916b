//! Self-describing JSON model files.
//!
//! Layout:
//!
//! ```text
//! { "format_version": 1,
//!   "checksum": "<sha256 of the canonical model JSON>",
//!   "model": { class_names, feature_names, leader_map, selection_report, forests } }
//! ```
//!
//! Trees are stored as flat parallel node arrays. Floats are written in their
//! shortest round-trip decimal form, so a reloaded model predicts bit-for-bit
//! the same as the one that was saved.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::ensemble::{LccdeModel, LeaderSelectionEvidence, SelectionReport};
use crate::error::{LccdeError, Result};
use crate::learners::{BoosterConfig, Node, TrainedForest, Tree};
use crate::types::{LeaderMap, Variant};

pub const FORMAT_VERSION: i64 = 1;

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: i64,
    checksum: String,
    model: &'a ModelBody,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelBody {
    class_names: Vec<String>,
    feature_names: Vec<String>,
    leader_map: Vec<Variant>,
    selection_report: ReportRecord,
    forests: Vec<ForestRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRecord {
    /// `f1[model][class]`
    f1: Vec<Vec<f64>>,
    cv_fit_seconds: Vec<f64>,
    folds: usize,
    seed: u64,
    hyperparameters: Vec<BoosterConfig>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestRecord {
    variant: Variant,
    n_features: usize,
    n_classes: usize,
    base_score: Vec<f64>,
    fit_seconds: f64,
    train_loss: Vec<f64>,
    trees: Vec<TreeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeRecord {
    round: usize,
    class: usize,
    n_samples: usize,
    feature: Vec<usize>,
    threshold: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    leaf_weight: Vec<f64>,
}

impl TreeRecord {
    fn from_tree(round: usize, class: usize, t: &Tree) -> TreeRecord {
        TreeRecord {
            round,
            class,
            n_samples: t.n_samples,
            feature: t.nodes.iter().map(|n| n.feature).collect(),
            threshold: t.nodes.iter().map(|n| n.threshold).collect(),
            left: t.nodes.iter().map(|n| n.left).collect(),
            right: t.nodes.iter().map(|n| n.right).collect(),
            leaf_weight: t.nodes.iter().map(|n| n.leaf_weight).collect(),
        }
    }

    fn into_tree(self) -> Result<Tree> {
        let n = self.feature.len();
        if [self.threshold.len(), self.left.len(), self.right.len(), self.leaf_weight.len()].iter().any(|&l| l != n)
            || n == 0
        {
            return Err(LccdeError::ModelInconsistent(format!(
                "tree (round {}, class {}) has node arrays of unequal or zero length",
                self.round, self.class
            )));
        }
        let nodes = (0..n)
            .map(|i| Node {
                feature: self.feature[i],
                threshold: self.threshold[i],
                left: self.left[i],
                right: self.right[i],
                leaf_weight: self.leaf_weight[i],
            })
            .collect();
        Ok(Tree { nodes, n_samples: self.n_samples })
    }
}

fn body_of(m: &LccdeModel) -> ModelBody {
    let ev = &m.report.evidence;
    ModelBody {
        class_names: m.class_names.clone(),
        feature_names: m.feature_names.clone(),
        leader_map: m.leader_map.leaders.clone(),
        selection_report: ReportRecord {
            f1: ev.f1.to_vec(),
            cv_fit_seconds: ev.fit_seconds.to_vec(),
            folds: m.report.folds,
            seed: m.report.seed,
            hyperparameters: m.forests.iter().map(|f| f.config.clone()).collect(),
            warnings: m.report.warnings.clone(),
        },
        forests: m
            .forests
            .iter()
            .map(|f| ForestRecord {
                variant: f.variant,
                n_features: f.n_features,
                n_classes: f.n_classes,
                base_score: f.base_score.clone(),
                fit_seconds: f.fit_seconds,
                train_loss: f.train_loss.clone(),
                trees: f
                    .trees
                    .iter()
                    .enumerate()
                    .flat_map(|(r, round)| round.iter().enumerate().map(move |(k, t)| TreeRecord::from_tree(r, k, t)))
                    .collect(),
            })
            .collect(),
    }
}

fn model_of(body: ModelBody) -> Result<LccdeModel> {
    let bad = |msg: String| LccdeError::ModelInconsistent(msg);
    let rep = body.selection_report;
    if rep.f1.len() != 3 || rep.cv_fit_seconds.len() != 3 || rep.hyperparameters.len() != 3 || body.forests.len() != 3 {
        return Err(bad("expected exactly three base models".into()));
    }
    let mut forests = Vec::with_capacity(3);
    for (rec, config) in body.forests.into_iter().zip(rep.hyperparameters) {
        let n_classes = rec.n_classes;
        if n_classes == 0 || rec.trees.len() % n_classes != 0 {
            return Err(bad(format!("forest {} has {} trees for {n_classes} classes", rec.variant, rec.trees.len())));
        }
        let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(rec.trees.len() / n_classes);
        for (i, t) in rec.trees.into_iter().enumerate() {
            let (round, class) = (i / n_classes, i % n_classes);
            if t.round != round || t.class != class {
                return Err(bad(format!("tree {i} of forest {} is out of order", rec.variant)));
            }
            if class == 0 {
                trees.push(Vec::with_capacity(n_classes));
            }
            trees[round].push(t.into_tree()?);
        }
        forests.push(TrainedForest {
            variant: rec.variant,
            n_features: rec.n_features,
            n_classes,
            base_score: rec.base_score,
            trees,
            config,
            fit_seconds: rec.fit_seconds,
            train_loss: rec.train_loss,
        });
    }
    let mut f1 = rep.f1.into_iter();
    let evidence = LeaderSelectionEvidence {
        f1: [f1.next().unwrap(), f1.next().unwrap(), f1.next().unwrap()],
        fit_seconds: [rep.cv_fit_seconds[0], rep.cv_fit_seconds[1], rep.cv_fit_seconds[2]],
    };
    let model = LccdeModel {
        forests: forests.try_into().expect("three forests"),
        leader_map: LeaderMap::new(body.leader_map),
        class_names: body.class_names,
        feature_names: body.feature_names,
        report: SelectionReport { evidence, folds: rep.folds, seed: rep.seed, warnings: rep.warnings },
    };
    model.check_consistency()?;
    Ok(model)
}

fn checksum(model: &Value) -> Result<String> {
    let canonical = serde_json::to_string(model).map_err(|e| LccdeError::ModelInconsistent(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Renders a model file.
pub fn to_model_string(m: &LccdeModel) -> Result<String> {
    m.check_consistency()?;
    let body = body_of(m);
    let value = serde_json::to_value(&body).map_err(|e| LccdeError::ModelInconsistent(e.to_string()))?;
    let file = ModelFileOut { format_version: FORMAT_VERSION, checksum: checksum(&value)?, model: &body };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| LccdeError::ModelInconsistent(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn save_model<W: Write>(m: &LccdeModel, mut sink: W) -> Result<()> {
    sink.write_all(to_model_string(m)?.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Writes the model next to `path` and renames it into place, so a failure
/// never leaves a partial file behind.
pub fn save_model_path(m: &LccdeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_model_string(m)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| LccdeError::Io(e.error))?;
    Ok(())
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses a model file.
pub fn from_model_str(text: &str) -> Result<LccdeModel> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| LccdeError::ModelParse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let version = doc
        .get("format_version")
        .and_then(Value::as_i64)
        .ok_or_else(|| LccdeError::ModelInconsistent("missing integer format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(LccdeError::ModelVersion { found: version, supported: FORMAT_VERSION });
    }
    let expected = doc
        .get("checksum")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LccdeError::ModelInconsistent("missing checksum".into()))?;
    let body = doc
        .get_mut("model")
        .map(Value::take)
        .ok_or_else(|| LccdeError::ModelInconsistent("missing model section".into()))?;
    let computed = checksum(&body)?;
    if computed != expected {
        return Err(LccdeError::ModelChecksum { expected, computed });
    }
    let body: ModelBody = serde_json::from_value(body).map_err(|e| LccdeError::ModelInconsistent(e.to_string()))?;
    model_of(body)
}

pub fn load_model<R: Read>(mut source: R) -> Result<LccdeModel> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| LccdeError::ModelParse {
        offset: e.valid_up_to(),
        message: "model file is not valid UTF-8".into(),
    })?;
    from_model_str(text)
}

pub fn load_model_path(path: impl AsRef<Path>) -> Result<LccdeModel> {
    load_model(std::fs::File::open(path)?)
}
