//! Python bindings: datasets, booster settings, training, arbitrated
//! prediction, metrics and model files.

use std::fs::File;

use lccde::ensemble::{predict_batch_traced, ArbitrationTrace};
use lccde::eval::{aggregate_metrics, confusion, per_class_metrics};
use lccde::ingest::{load_can_hex_path, load_numeric_path};
use lccde::persist::{from_model_str, load_model_path, save_model_path, to_model_string};
use lccde::{
    arbitrate as arbitrate_core, predict_batch, select_leaders as select_leaders_core, train_lccde, BoosterConfig,
    Dataset, LccdeError, LccdeModel, LeaderMap, LeaderSelectionEvidence, Variant,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: LccdeError) -> PyErr {
    match e {
        LccdeError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn variant(i: usize) -> PyResult<Variant> {
    Variant::from_index(i).ok_or_else(|| PyValueError::new_err(format!("model index {i} is not 0, 1 or 2")))
}

/// Labelled feature matrix. Labels are dense class ids `0..n_classes`.
#[pyclass(name = "Dataset", module = "lccde", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, labels, feature_names=None, class_names=None))]
    fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Option<Vec<String>>,
        class_names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let width = features.first().map_or(0, Vec::len);
        let feature_names = feature_names.unwrap_or_else(|| Dataset::default_feature_names(width));
        let class_names = class_names
            .unwrap_or_else(|| (0..labels.iter().max().map_or(0, |m| m + 1)).map(|c| c.to_string()).collect());
        Ok(PyDataset { inner: Dataset::new(features, labels, feature_names, class_names).map_err(to_py)? })
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.features.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, features={}, classes={:?})",
            self.inner.n_rows(),
            self.inner.n_features(),
            self.inner.class_names
        )
    }
}

/// Hyperparameters of one base learner; keyword arguments override defaults.
#[pyclass(name = "BoosterConfig", module = "lccde", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: BoosterConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut c = PyConfig { inner: BoosterConfig::default() };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                c.set(&k.extract::<String>()?, &v)?;
            }
        }
        Ok(c)
    }

    /// Sets one field by name from any value whose `str()` parses.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let text = value.str()?.to_string();
        let mut next = self.inner.clone();
        next.set(key, &text).map_err(to_py)?;
        next.validate().map_err(to_py)?;
        self.inner = next;
        Ok(())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner;
        let d = PyDict::new(py);
        d.set_item("rounds", c.rounds)?;
        d.set_item("learning_rate", c.learning_rate)?;
        d.set_item("max_depth", c.max_depth)?;
        d.set_item("l2_reg", c.l2_reg)?;
        d.set_item("min_child_hessian", c.min_child_hessian)?;
        d.set_item("max_leaves", c.max_leaves)?;
        d.set_item("goss_top_fraction", c.goss_top_fraction)?;
        d.set_item("goss_rand_fraction", c.goss_rand_fraction)?;
        d.set_item("seed", c.seed)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn trace_dict<'py>(py: Python<'py>, t: &ArbitrationTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("branch", t.branch.name())?;
    d.set_item("base_classes", t.base_classes.to_vec())?;
    d.set_item("confidences", t.confidences.to_vec())?;
    d.set_item("matched_models", t.matched_models.iter().map(|v| v.index()).collect::<Vec<_>>())?;
    d.set_item("chosen_model", t.chosen_model.map(|v| v.index()))?;
    d.set_item("final_class", t.final_class)?;
    Ok(d)
}

/// A trained ensemble of the three base learners.
#[pyclass(name = "Model", module = "lccde", frozen)]
struct PyModel {
    inner: LccdeModel,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    /// Leader model index of each class.
    #[getter]
    fn leaders(&self) -> Vec<usize> {
        self.inner.leader_map.leaders.iter().map(|v| v.index()).collect()
    }

    /// Cross-validated F1, `f1[model][class]`.
    #[getter]
    fn cv_f1(&self) -> Vec<Vec<f64>> {
        self.inner.report.evidence.f1.to_vec()
    }

    #[getter]
    fn cv_fit_seconds(&self) -> Vec<f64> {
        self.inner.report.evidence.fit_seconds.to_vec()
    }

    /// Predicted class ids.
    fn predict(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        let preds = py.detach(|| predict_batch(&self.inner, &rows)).map_err(to_py)?;
        Ok(preds.iter().map(|p| p.class_id).collect())
    }

    /// `(class_id, confidence)` per row.
    fn predict_with_confidence(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<(usize, f64)>> {
        let preds = py.detach(|| predict_batch(&self.inner, &rows)).map_err(to_py)?;
        Ok(preds.iter().map(|p| (p.class_id, p.confidence)).collect())
    }

    /// One dict per row describing how the three base predictions were arbitrated.
    fn trace<'py>(&self, py: Python<'py>, rows: Vec<Vec<f64>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let traced = py.detach(|| predict_batch_traced(&self.inner, &rows)).map_err(to_py)?;
        traced.iter().map(|(_, t)| trace_dict(py, t)).collect()
    }

    /// Class probabilities of one base model (0 goss_leafwise, 1 depthwise, 2 oblivious).
    fn base_proba(&self, model: usize, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let forest = self.inner.forest(variant(model)?);
        rows.iter().map(|x| forest.predict_proba(x).map(|p| p.probabilities).map_err(to_py)).collect()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_model_path(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        to_model_string(&self.inner).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyModel { inner: load_model_path(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: from_model_str(text).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        let leaders: Vec<&str> = self.inner.leader_map.leaders.iter().map(|v| v.name()).collect();
        format!("Model(classes={:?}, leaders={leaders:?})", self.inner.class_names)
    }
}

fn configs_of(configs: Option<Vec<PyConfig>>, seed: u64) -> PyResult<[BoosterConfig; 3]> {
    match configs {
        None => Ok([0, 1, 2].map(|_| BoosterConfig::default().with_seed(seed))),
        Some(c) if c.len() == 1 => Ok([0, 1, 2].map(|_| c[0].inner.clone())),
        Some(c) if c.len() == 3 => Ok([c[0].inner.clone(), c[1].inner.clone(), c[2].inner.clone()]),
        Some(c) => Err(PyValueError::new_err(format!("expected 1 or 3 configs, got {}", c.len()))),
    }
}

/// Cross-validates the three base learners, selects per-class leaders and
/// refits every learner on the whole dataset.
#[pyfunction]
#[pyo3(signature = (dataset, configs=None, folds=5, seed=0))]
fn train(
    py: Python<'_>,
    dataset: &PyDataset,
    configs: Option<Vec<PyConfig>>,
    folds: usize,
    seed: u64,
) -> PyResult<PyModel> {
    let configs = configs_of(configs, seed)?;
    let model = py.detach(|| train_lccde(&dataset.inner, &configs, folds, seed)).map_err(to_py)?;
    Ok(PyModel { inner: model })
}

#[pyfunction]
fn load_can_hex(path: &str) -> PyResult<PyDataset> {
    File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    Ok(PyDataset { inner: load_can_hex_path(path).map_err(to_py)?.0 })
}

#[pyfunction]
#[pyo3(signature = (path, label_col="label"))]
fn load_numeric_csv(path: &str, label_col: &str) -> PyResult<PyDataset> {
    File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    Ok(PyDataset { inner: load_numeric_path(path, label_col).map_err(to_py)?.0 })
}

/// Leader of each class from `f1[model][class]` and per-model fit times.
#[pyfunction]
fn select_leaders(f1: Vec<Vec<f64>>, fit_seconds: [f64; 3]) -> PyResult<Vec<usize>> {
    let [a, b, c]: [Vec<f64>; 3] =
        f1.try_into().map_err(|_| PyValueError::new_err("f1 needs one row per model (3 rows)"))?;
    if a.len() != b.len() || b.len() != c.len() {
        return Err(PyValueError::new_err("f1 rows must have equal length"));
    }
    let map = select_leaders_core(&LeaderSelectionEvidence { f1: [a, b, c], fit_seconds });
    Ok(map.leaders.iter().map(|v| v.index()).collect())
}

/// Arbitrates three base predictions given the leader model of each class.
#[pyfunction]
fn arbitrate<'py>(
    py: Python<'py>,
    classes: [usize; 3],
    confidences: [f64; 3],
    leaders: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    if let Some(&c) = classes.iter().find(|&&c| c >= leaders.len()) {
        return Err(PyValueError::new_err(format!("class {c} has no leader")));
    }
    let map = LeaderMap::new(leaders.into_iter().map(variant).collect::<PyResult<_>>()?);
    trace_dict(py, &arbitrate_core(classes, confidences, &map))
}

/// Per-class and aggregate metrics of a prediction.
#[pyfunction]
fn metrics<'py>(
    py: Python<'py>,
    y_true: Vec<usize>,
    y_pred: Vec<usize>,
    n_classes: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cm = confusion(&y_true, &y_pred, n_classes).map_err(to_py)?;
    let per = per_class_metrics(&cm);
    let agg = aggregate_metrics(&cm).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("confusion", cm.counts.clone())?;
    d.set_item("precision", per.precision)?;
    d.set_item("recall", per.recall)?;
    d.set_item("f1", per.f1)?;
    d.set_item("support", per.support)?;
    d.set_item("accuracy", agg.accuracy)?;
    d.set_item("weighted_f1", agg.weighted_f1)?;
    d.set_item("macro_f1", agg.macro_f1)?;
    Ok(d)
}

#[pymodule]
fn _lccde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(load_can_hex, m)?)?;
    m.add_function(wrap_pyfunction!(load_numeric_csv, m)?)?;
    m.add_function(wrap_pyfunction!(select_leaders, m)?)?;
    m.add_function(wrap_pyfunction!(arbitrate, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add("MODEL_NAMES", Variant::ALL.map(|v| v.name()).to_vec())?;
    Ok(())
}
